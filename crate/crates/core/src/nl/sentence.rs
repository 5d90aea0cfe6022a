//! Sentence grammar of the synthetic benchmark language.
//!
//! Facts: `Bob is poor`, `Bob is not big`, `Dogs like cats`,
//! `The dog does not chase the cat`.
//! Rules: `If someone is A [and B ...] then they are C`, the animal form
//! `If something is A and it chases the cat then it is not C`, and
//! `All dogs are big`. "someone/something/they/it" denote the rule variable.

use crate::logic::{is_identifier, Literal, Polarity, Rule, Term};

use super::{Lexicon, NlError, Sentence};

const PRONOUNS: &[&str] = &["someone", "something", "they", "it", "he", "she"];
const RESERVED: &[&str] = &[
    "if", "then", "and", "not", "is", "are", "does", "do", "the", "a", "an", "all",
    "someone", "something", "they", "it", "he", "she",
];

pub(crate) const VARIABLE: &str = "X";

fn variable() -> Term {
    Term::Variable(VARIABLE.to_string())
}

fn word_ok(word: &str) -> bool {
    is_identifier(word)
        && word.starts_with(|c: char| c.is_ascii_lowercase())
        && !RESERVED.contains(&word)
}

fn unrecognized(sentence: &str, reason: impl Into<String>) -> NlError {
    NlError::Unrecognized {
        sentence: sentence.to_string(),
        reason: reason.into(),
    }
}

/// Lowercased words without commas or final punctuation.
pub(crate) fn words(sentence: &str) -> Vec<String> {
    sentence
        .trim()
        .trim_end_matches(['.', '?', '!'])
        .replace(',', " ")
        .split_whitespace()
        .map(str::to_lowercase)
        .collect()
}

struct ClauseParser<'a> {
    lexicon: &'a Lexicon,
    sentence: &'a str,
    in_rule: bool,
}

impl ClauseParser<'_> {
    fn err(&self, reason: impl Into<String>) -> NlError {
        unrecognized(self.sentence, reason)
    }

    fn constant(&self, word: &str, plural: bool) -> Result<Term, NlError> {
        if !word_ok(word) {
            return Err(self.err(format!("`{word}` is not a usable name")));
        }
        let name = if plural {
            self.lexicon.lemma(word)
        } else {
            word.to_string()
        };
        Ok(Term::Constant(name))
    }

    fn object(&self, words: &[String], plural: bool) -> Result<Term, NlError> {
        let words: Vec<&str> = words.iter().map(String::as_str).collect();
        match words.as_slice() {
            [w] if PRONOUNS.contains(w) && self.in_rule => Ok(variable()),
            ["the", w] | [w] => self.constant(w, plural),
            _ => Err(self.err("expected a single object after the verb")),
        }
    }

    /// Parses one clause; `previous` is the subject carried over in
    /// conjunctions such as "someone is big and strong".
    fn clause(&self, words: &[String], previous: Option<&Term>) -> Result<(Literal, Term), NlError> {
        let w: Vec<&str> = words.iter().map(String::as_str).collect();
        if w.is_empty() {
            return Err(self.err("empty clause"));
        }
        let shorthand = previous.is_some()
            && (matches!(w[0], "is" | "are" | "not" | "does" | "do")
                || w.len() <= 2
                || (w.len() == 3 && w[1] == "the"));
        enum Subject<'s> {
            Var,
            Word(&'s str),
            Carried,
        }
        let (subject, rest) = if PRONOUNS.contains(&w[0]) {
            if !self.in_rule {
                return Err(self.err("pronoun subject outside a rule"));
            }
            (Subject::Var, &words[1..])
        } else if w[0] == "the" && w.len() >= 3 {
            (Subject::Word(w[1]), &words[2..])
        } else if shorthand {
            (Subject::Carried, words)
        } else if w.len() >= 3 {
            (Subject::Word(w[0]), &words[1..])
        } else {
            return Err(self.err("expected `<subject> is <attribute>` or `<subject> <verb> <object>`"));
        };

        let r: Vec<&str> = rest.iter().map(String::as_str).collect();
        // (polarity, predicate, object words, plural agreement)
        let (polarity, predicate, object, plural) = match r.as_slice() {
            [cop @ ("is" | "are"), "not", adj] => (Polarity::Negative, *adj, None, *cop == "are"),
            [cop @ ("is" | "are"), adj] => (Polarity::Positive, *adj, None, *cop == "are"),
            ["not", adj] if matches!(subject, Subject::Carried) => {
                (Polarity::Negative, *adj, None, false)
            }
            [adj] if matches!(subject, Subject::Carried) => (Polarity::Positive, *adj, None, false),
            [aux @ ("does" | "do"), "not", verb, ..] if r.len() >= 4 => {
                (Polarity::Negative, *verb, Some(&rest[3..]), *aux == "do")
            }
            [verb, _, ..] => (Polarity::Positive, *verb, Some(&rest[1..]), !verb.ends_with('s')),
            _ => return Err(self.err("could not find an attribute or a verb phrase")),
        };
        if !word_ok(predicate) {
            return Err(self.err(format!("`{predicate}` is not a usable attribute or verb")));
        }

        let subject = match subject {
            Subject::Var => variable(),
            Subject::Word(word) => self.constant(word, plural)?,
            Subject::Carried => previous.cloned().expect("shorthand requires a previous subject"),
        };
        let literal = match object {
            None => Literal::new(polarity, predicate, vec![subject.clone()]),
            Some(obj) => {
                let verb = self.lexicon.lemma(predicate);
                let object = self.object(obj, plural)?;
                Literal::new(polarity, &verb, vec![subject.clone(), object])
            }
        }
        .map_err(|e| self.err(e.to_string()))?;
        Ok((literal, subject))
    }
}

pub(crate) fn parse(lexicon: &Lexicon, sentence: &str) -> Result<Sentence, NlError> {
    let words = words(sentence);
    if words.is_empty() {
        return Err(unrecognized(sentence, "empty sentence"));
    }
    let parser = ClauseParser {
        lexicon,
        sentence,
        in_rule: words[0] == "if" || words[0] == "all",
    };

    match words[0].as_str() {
        "if" => {
            let then = words
                .iter()
                .position(|w| w == "then")
                .ok_or_else(|| parser.err("rule without `then`"))?;
            let mut body = Vec::new();
            let mut subject: Option<Term> = None;
            for part in words[1..then].split(|w| w == "and") {
                let (lit, subj) = parser.clause(part, subject.as_ref())?;
                body.push(lit);
                subject = Some(subj);
            }
            let (head, _) = parser.clause(&words[then + 1..], subject.as_ref())?;
            let rule = Rule::new(head, body).map_err(|e| parser.err(e.to_string()))?;
            if let Some(v) = rule.unbound_variable() {
                return Err(parser.err(format!("conclusion mentions {v} but no condition does")));
            }
            Ok(Sentence::Rule(rule))
        }
        "all" => {
            let w: Vec<&str> = words.iter().map(String::as_str).collect();
            let (kind, polarity, adj) = match w.as_slice() {
                ["all", kind, "are", "not", adj] => (*kind, Polarity::Negative, *adj),
                ["all", kind, "are", adj] => (*kind, Polarity::Positive, *adj),
                _ => return Err(parser.err("expected `All <kind> are [not] <attribute>`")),
            };
            if !word_ok(kind) || !word_ok(adj) {
                return Err(parser.err("unusable word in `All ... are ...`"));
            }
            let head = Literal::new(polarity, adj, vec![variable()]).map_err(|e| parser.err(e.to_string()))?;
            let body = Literal::positive(&lexicon.lemma(kind), vec![variable()])
                .map_err(|e| parser.err(e.to_string()))?;
            Ok(Sentence::Rule(Rule::new(head, vec![body]).expect("non-empty body")))
        }
        _ => {
            if words.iter().any(|w| w == "and") {
                return Err(parser.err("compound facts are not supported"));
            }
            let (lit, _) = parser.clause(&words, None)?;
            Ok(Sentence::Fact(lit))
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Position {
    First,
    Next,
}

fn clause(lexicon: &Lexicon, lit: &Literal, position: Position) -> String {
    let plural = lit.args[0].is_variable() && position == Position::Next;
    let subject = match &lit.args[0] {
        Term::Variable(_) if position == Position::First => "someone".to_string(),
        Term::Variable(_) => "they".to_string(),
        Term::Constant(c) => c.clone(),
    };
    let negative = lit.is_negative();
    match lit.args.get(1) {
        None => {
            let copula = if plural { "are" } else { "is" };
            let not = if negative { "not " } else { "" };
            format!("{subject} {copula} {not}{}", lit.predicate)
        }
        Some(obj) => {
            let object = match obj {
                Term::Variable(_) => "someone",
                Term::Constant(c) => c.as_str(),
            };
            match (negative, plural) {
                (true, true) => format!("{subject} do not {} {object}", lit.predicate),
                (true, false) => format!("{subject} does not {} {object}", lit.predicate),
                (false, true) => format!("{subject} {} {object}", lit.predicate),
                (false, false) => {
                    format!("{subject} {} {object}", lexicon.third_person(&lit.predicate))
                }
            }
        }
    }
}

pub(crate) fn render_fact(lexicon: &Lexicon, lit: &Literal) -> String {
    format!("{}.", clause(lexicon, lit, Position::First))
}

pub(crate) fn render_question(lexicon: &Lexicon, lit: &Literal) -> String {
    format!("{}?", clause(lexicon, lit, Position::First))
}

pub(crate) fn render_rule(lexicon: &Lexicon, rule: &Rule) -> String {
    let mut seen_variable = false;
    let mut conditions = Vec::with_capacity(rule.body.len());
    for lit in &rule.body {
        let position = if seen_variable { Position::Next } else { Position::First };
        seen_variable |= lit.args[0].is_variable();
        conditions.push(clause(lexicon, lit, position));
    }
    let head_position = if seen_variable { Position::Next } else { Position::First };
    format!(
        "if {} then {}.",
        conditions.join(" and "),
        clause(lexicon, &rule.head, head_position)
    )
}

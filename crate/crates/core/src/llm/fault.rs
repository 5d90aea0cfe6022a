use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    DropStatement,
    RenamePredicate,
    FlipPolarity,
    BreakToken,
    UnsafeRule,
}

/// Semantic faults leave the text parseable but change its meaning; syntax
/// faults make it fail to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultClass {
    Semantic,
    Syntax,
}

impl FaultKind {
    pub const ALL: [FaultKind; 5] = [
        FaultKind::DropStatement,
        FaultKind::RenamePredicate,
        FaultKind::FlipPolarity,
        FaultKind::BreakToken,
        FaultKind::UnsafeRule,
    ];

    pub fn class(self) -> FaultClass {
        match self {
            FaultKind::BreakToken | FaultKind::UnsafeRule => FaultClass::Syntax,
            _ => FaultClass::Semantic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultProfile {
    pub syntax_fault_rate: f64,
    pub semantic_fault_rate: f64,
    pub fault_kinds: Vec<FaultKind>,
    pub rng_seed: u64,
    /// Number of correction prompts (retranslations or repairs) after which a
    /// corrupted exchange is answered correctly; `None` never heals.
    pub faults_heal_after: Option<u32>,
}

impl Default for FaultProfile {
    fn default() -> Self {
        FaultProfile {
            syntax_fault_rate: 0.0,
            semantic_fault_rate: 0.0,
            fault_kinds: FaultKind::ALL.to_vec(),
            rng_seed: 0,
            faults_heal_after: Some(1),
        }
    }
}

/// Faults assigned to one exchange, fixed for all of its replies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaultPlan {
    pub semantic: Option<(FaultKind, u64)>,
    pub syntax: Option<(FaultKind, u64)>,
}

impl FaultProfile {
    pub fn validate(&self) -> Result<(), LlmError> {
        for (name, p) in [
            ("syntax_fault_rate", self.syntax_fault_rate),
            ("semantic_fault_rate", self.semantic_fault_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(LlmError::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    fn kinds(&self, class: FaultClass) -> Vec<FaultKind> {
        let mut kinds: Vec<FaultKind> = self
            .fault_kinds
            .iter()
            .copied()
            .filter(|k| k.class() == class)
            .collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }

    /// The plan for an exchange depends only on the seed and the exchange key,
    /// never on the order in which exchanges arrive.
    pub fn plan(&self, exchange_key: &str) -> FaultPlan {
        let mut hasher = Sha256::new();
        hasher.update(self.rng_seed.to_le_bytes());
        hasher.update(exchange_key.as_bytes());
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        let mut rng = ChaCha8Rng::from_seed(seed);

        let semantic_roll: f64 = rng.gen();
        let syntax_roll: f64 = rng.gen();
        let semantic_pick: usize = rng.gen();
        let syntax_pick: usize = rng.gen();
        let semantic_salt: u64 = rng.gen();
        let syntax_salt: u64 = rng.gen();

        let choose = |class, roll: f64, rate: f64, pick: usize, salt| {
            let kinds = self.kinds(class);
            (!kinds.is_empty() && roll < rate).then(|| (kinds[pick % kinds.len()], salt))
        };
        FaultPlan {
            semantic: choose(
                FaultClass::Semantic,
                semantic_roll,
                self.semantic_fault_rate,
                semantic_pick,
                semantic_salt,
            ),
            syntax: choose(
                FaultClass::Syntax,
                syntax_roll,
                self.syntax_fault_rate,
                syntax_pick,
                syntax_salt,
            ),
        }
    }

    /// Whether the reply with the given correction index is still corrupted.
    pub fn corrupts(&self, index: u32) -> bool {
        self.faults_heal_after.is_none_or(|k| index < k)
    }
}

#[derive(Debug, Clone, Copy)]
struct Ident {
    start: usize,
    end: usize,
    /// Followed by `(`, i.e. a predicate name.
    predicate: bool,
}

fn identifiers(line: &str) -> Vec<Ident> {
    let bytes = line.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_alphabetic() || bytes[i] == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let mut j = i;
            while j < bytes.len() && bytes[j] == b' ' {
                j += 1;
            }
            out.push(Ident {
                start,
                end: i,
                predicate: bytes.get(j) == Some(&b'('),
            });
        } else {
            i += 1;
        }
    }
    out
}

fn statement_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

fn join(lines: &[String]) -> String {
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

/// Applies one fault to program text, choosing positions from `salt`.
/// Semantic kinds keep the text parseable; syntax kinds break it. Text the
/// fault cannot apply to is returned with a delimiter removed instead.
pub fn corrupt(text: &str, kind: FaultKind, salt: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(salt);
    let mut lines = statement_lines(text);
    if lines.is_empty() {
        return text.to_string();
    }
    match kind {
        FaultKind::DropStatement if lines.len() > 1 => {
            lines.remove(rng.gen_range(0..lines.len()));
            join(&lines)
        }
        FaultKind::RenamePredicate | FaultKind::FlipPolarity => {
            let occurrences: Vec<(usize, Ident)> = lines
                .iter()
                .enumerate()
                .flat_map(|(i, l)| identifiers(l).into_iter().filter(|id| id.predicate).map(move |id| (i, id)))
                .collect();
            if occurrences.is_empty() {
                return break_token(&lines, &mut rng);
            }
            let (li, id) = occurrences[rng.gen_range(0..occurrences.len())];
            let line = &lines[li];
            let name = &line[id.start..id.end];
            lines[li] = if kind == FaultKind::RenamePredicate {
                let taken: Vec<&str> = occurrences
                    .iter()
                    .map(|(i, o)| &lines[*i][o.start..o.end])
                    .collect();
                let mut fresh = format!("un{name}");
                while taken.contains(&fresh.as_str()) {
                    fresh.insert_str(0, "un");
                }
                format!("{}{fresh}{}", &line[..id.start], &line[id.end..])
            } else if line[..id.start].ends_with('~') {
                format!("{}{}", &line[..id.start - 1], &line[id.start..])
            } else {
                format!("{}~{}", &line[..id.start], &line[id.start..])
            };
            join(&lines)
        }
        FaultKind::UnsafeRule => {
            let candidates: Vec<(usize, Ident)> = lines
                .iter()
                .enumerate()
                .filter_map(|(i, l)| {
                    let head_end = l.find(":-")?;
                    identifiers(&l[..head_end])
                        .into_iter()
                        .find(|id| !id.predicate && l.as_bytes()[id.start].is_ascii_uppercase())
                        .map(|id| (i, id))
                })
                .collect();
            if candidates.is_empty() {
                return break_token(&lines, &mut rng);
            }
            let (li, id) = candidates[rng.gen_range(0..candidates.len())];
            let line = &lines[li];
            let used: Vec<&str> = identifiers(line).iter().map(|i| &line[i.start..i.end]).collect();
            let fresh = ["Y", "Z", "W", "V", "U"]
                .into_iter()
                .find(|v| !used.contains(v))
                .unwrap_or("Unbound");
            lines[li] = format!("{}{fresh}{}", &line[..id.start], &line[id.end..]);
            join(&lines)
        }
        _ => break_token(&lines, &mut rng),
    }
}

fn break_token(lines: &[String], rng: &mut ChaCha8Rng) -> String {
    let text = join(lines);
    let bytes = text.as_bytes();
    let mut positions: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' | b')' | b',' | b'.' | b'?' => positions.push((i, 1)),
            b':' if bytes.get(i + 1) == Some(&b'-') => {
                positions.push((i, 2));
                i += 1;
            }
            _ => {}
        }
        i += 1;
    }
    if positions.is_empty() {
        return text;
    }
    let (at, len) = positions[rng.gen_range(0..positions.len())];
    format!("{}{}", &text[..at], &text[at + len..])
}

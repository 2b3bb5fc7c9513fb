//! One-sided substitution subshifts and ultimately periodic sequences.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symbols are indices into the system's alphabet.
pub type Symbol = u8;

/// Default cap on `language_words` lengths.
pub const DEFAULT_MAX_WORD_LENGTH: usize = 64;

/// A point of a one-sided shift: the fixed-point sequence read from `offset`.
///
/// `seed` and `generation_depth` record how the underlying sequence is
/// generated (the seed letter and the substitution power whose fixed point
/// it is). Ultimately periodic sequences use depth 0.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolicPoint {
    pub seed: Symbol,
    pub generation_depth: u32,
    pub offset: u64,
}

impl SymbolicPoint {
    pub fn shifted(self, n: u64) -> SymbolicPoint {
        SymbolicPoint {
            offset: self.offset + n,
            ..self
        }
    }
}

/// A primitive substitution and the subshift generated by its fixed point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionSystem {
    pub name: String,
    pub alphabet: Vec<char>,
    pub rules: Vec<Vec<Symbol>>,
    /// Smallest power of the incidence matrix that is entrywise positive.
    pub primitive_power: usize,
    /// Letter `a` and power `p` with σ^p(a) beginning with `a`, |σ^p(a)| ≥ 2.
    pub seed: Symbol,
    pub power: u32,
}

fn bool_matmul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    let mut out = vec![vec![false; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] {
                for j in 0..n {
                    out[i][j] |= b[k][j];
                }
            }
        }
    }
    out
}

impl SubstitutionSystem {
    /// Builds a substitution from `symbol -> image` rules, checking primitivity.
    pub fn new(name: impl Into<String>, rules: &BTreeMap<char, String>) -> Result<Self> {
        if rules.is_empty() || rules.len() > 256 {
            return Err(Error::InvalidArgument(
                "alphabet must have between 1 and 256 symbols".into(),
            ));
        }
        let alphabet: Vec<char> = rules.keys().copied().collect();
        let index: BTreeMap<char, Symbol> = alphabet
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i as Symbol))
            .collect();
        let mut images = Vec::with_capacity(alphabet.len());
        for (c, image) in rules {
            if image.is_empty() {
                return Err(Error::InvalidArgument(format!("rule for '{c}' is empty")));
            }
            let word = image
                .chars()
                .map(|s| {
                    index.get(&s).copied().ok_or_else(|| {
                        Error::InvalidArgument(format!("rule for '{c}' uses unknown symbol '{s}'"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            images.push(word);
        }
        Self::from_rules(name.into(), alphabet, images)
    }

    pub fn from_rules(name: String, alphabet: Vec<char>, rules: Vec<Vec<Symbol>>) -> Result<Self> {
        let n = alphabet.len();
        let primitive_power = primitivity_power(&rules).ok_or(Error::NotPrimitive { max_power: n * n })?;
        if rules.iter().all(|r| r.len() == 1) {
            return Err(Error::NonGrowing);
        }
        let (seed, power) = find_seed(&rules).ok_or(Error::NonGrowing)?;
        Ok(SubstitutionSystem {
            name,
            alphabet,
            rules,
            primitive_power,
            seed,
            power,
        })
    }

    pub fn fibonacci() -> Self {
        Self::from_rules("fibonacci".into(), vec!['0', '1'], vec![vec![0, 1], vec![0]])
            .expect("fibonacci is primitive")
    }

    pub fn thue_morse() -> Self {
        Self::from_rules("thue-morse".into(), vec!['0', '1'], vec![vec![0, 1], vec![1, 0]])
            .expect("thue-morse is primitive")
    }

    pub fn apply(&self, word: &[Symbol]) -> Vec<Symbol> {
        let mut out = Vec::with_capacity(word.len() * 2);
        for &s in word {
            out.extend_from_slice(&self.rules[s as usize]);
        }
        out
    }

    fn apply_power(&self, word: &[Symbol], power: u32) -> Vec<Symbol> {
        let mut w = word.to_vec();
        for _ in 0..power {
            w = self.apply(&w);
        }
        w
    }

    /// Prefix of the fixed point of σ^power starting at `seed`, of length
    /// at least `min_len` (possibly longer).
    pub fn fixed_point_prefix(&self, min_len: usize) -> Vec<Symbol> {
        let mut w = vec![self.seed];
        while w.len() < min_len.max(1) {
            w = self.apply_power(&w, self.power);
        }
        w
    }

    pub fn point(&self, offset: u64) -> SymbolicPoint {
        SymbolicPoint {
            seed: self.seed,
            generation_depth: self.power,
            offset,
        }
    }

    /// The first `len` symbols of `point`.
    pub fn read(&self, point: &SymbolicPoint, len: usize) -> Vec<Symbol> {
        let start = point.offset as usize;
        let w = self.fixed_point_prefix(start + len);
        w[start..start + len].to_vec()
    }

    pub fn render(&self, word: &[Symbol]) -> String {
        word.iter().map(|&s| self.alphabet[s as usize]).collect()
    }

    /// Length-2 language: closure of the first fixed-point factor under
    /// ab ↦ factors of σ(ab), iterated until stable.
    fn two_letter_language(&self) -> BTreeSet<Vec<Symbol>> {
        let start = self.fixed_point_prefix(2);
        let mut found: BTreeSet<Vec<Symbol>> = BTreeSet::new();
        let mut queue = vec![start[..2].to_vec()];
        while let Some(w) = queue.pop() {
            if !found.insert(w.clone()) {
                continue;
            }
            let image = self.apply(&w);
            for pair in image.windows(2) {
                if !found.contains(pair) {
                    queue.push(pair.to_vec());
                }
            }
        }
        found
    }

    /// Words σ^m(ab), ab legal, with m a multiple of the fixed-point power and
    /// every letter image of length ≥ n − 1. Every legal word of length n
    /// occurs inside one of them, and every factor of them is legal.
    pub(crate) fn covering_expansions(&self, n: usize) -> Vec<Vec<Symbol>> {
        let letters: Vec<Vec<Symbol>> = (0..self.alphabet.len() as Symbol).map(|c| vec![c]).collect();
        let mut m = self.power;
        loop {
            let shortest = letters
                .iter()
                .map(|c| self.apply_power(c, m).len())
                .min()
                .unwrap_or(0);
            if shortest + 1 >= n {
                break;
            }
            m += self.power;
        }
        self.two_letter_language()
            .iter()
            .map(|ab| self.apply_power(ab, m))
            .collect()
    }

    /// All factors of length `length` of the subshift.
    pub fn language_words(&self, length: usize, max_length: usize) -> Result<BTreeSet<Vec<Symbol>>> {
        if length == 0 {
            return Err(Error::InvalidArgument("word length must be ≥ 1".into()));
        }
        if length > max_length {
            return Err(Error::InvalidArgument(format!(
                "word length {length} exceeds configured maximum {max_length}"
            )));
        }
        if length == 1 {
            // primitivity makes every letter occur
            return Ok((0..self.alphabet.len() as Symbol).map(|c| vec![c]).collect());
        }
        let two = self.two_letter_language();
        if length == 2 {
            return Ok(two);
        }
        let mut words = BTreeSet::new();
        for w in self.covering_expansions(length) {
            for f in w.windows(length) {
                words.insert(f.to_vec());
            }
        }
        Ok(words)
    }

    /// First offset at which `word` occurs in the fixed point, searching a
    /// prefix of length `search`.
    pub fn first_occurrence(&self, word: &[Symbol], search: usize) -> Option<u64> {
        let prefix = self.fixed_point_prefix(search.max(word.len()));
        prefix
            .windows(word.len())
            .position(|w| w == word)
            .map(|p| p as u64)
    }
}

/// Smallest k ≤ n² with M^k > 0 entrywise, where M is the incidence matrix.
fn primitivity_power(rules: &[Vec<Symbol>]) -> Option<usize> {
    let n = rules.len();
    let mut incidence = vec![vec![false; n]; n];
    for (a, image) in rules.iter().enumerate() {
        for &b in image {
            incidence[a][b as usize] = true;
        }
    }
    let mut power = incidence.clone();
    for k in 1..=n * n {
        if power.iter().all(|row| row.iter().all(|&v| v)) {
            return Some(k);
        }
        power = bool_matmul(&power, &incidence);
    }
    None
}

/// Smallest power p and letter a with σ^p(a) starting with a and |σ^p(a)| ≥ 2.
fn find_seed(rules: &[Vec<Symbol>]) -> Option<(Symbol, u32)> {
    let n = rules.len();
    let mut first: Vec<Symbol> = (0..n as Symbol).collect();
    let mut lengths: Vec<u128> = vec![1; n];
    for p in 1..=(n * n + n) as u32 {
        // σ^p(a)[0] = f(σ^{p-1}(a)[0]) and |σ^p(a)| = Σ_{b∈σ(a)} |σ^{p-1}(b)|
        first = first.iter().map(|&c| rules[c as usize][0]).collect();
        lengths = rules
            .iter()
            .map(|image| {
                image
                    .iter()
                    .fold(0u128, |acc, &b| acc.saturating_add(lengths[b as usize]))
            })
            .collect();
        for a in 0..n {
            if first[a] as usize == a && lengths[a] >= 2 {
                return Some((a as Symbol, p));
            }
        }
    }
    None
}

/// The orbit closure of a single ultimately periodic sequence `prefix · cycle^∞`.
///
/// Used for synthetic recurrence checks; such systems are generally not minimal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceSystem {
    pub name: String,
    pub alphabet: Vec<char>,
    pub prefix: Vec<Symbol>,
    pub cycle: Vec<Symbol>,
}

impl SequenceSystem {
    pub fn new(name: impl Into<String>, prefix: &str, cycle: &str) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::InvalidArgument("cycle must be nonempty".into()));
        }
        let alphabet: Vec<char> = prefix
            .chars()
            .chain(cycle.chars())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let encode = |s: &str| -> Vec<Symbol> {
            s.chars()
                .map(|c| alphabet.iter().position(|&a| a == c).unwrap() as Symbol)
                .collect()
        };
        Ok(SequenceSystem {
            name: name.into(),
            prefix: encode(prefix),
            cycle: encode(cycle),
            alphabet,
        })
    }

    /// 1 0 0 0 ...
    pub fn single_one() -> Self {
        Self::new("single-one", "1", "0").expect("valid sequence")
    }

    #[inline]
    pub fn symbol(&self, index: u64) -> Symbol {
        let p = self.prefix.len() as u64;
        if index < p {
            self.prefix[index as usize]
        } else {
            self.cycle[((index - p) % self.cycle.len() as u64) as usize]
        }
    }

    pub fn point(&self, offset: u64) -> SymbolicPoint {
        SymbolicPoint {
            seed: self.symbol(0),
            generation_depth: 0,
            offset,
        }
    }

    pub fn read(&self, point: &SymbolicPoint, len: usize) -> Vec<Symbol> {
        (0..len as u64).map(|i| self.symbol(point.offset + i)).collect()
    }

    pub fn render(&self, word: &[Symbol]) -> String {
        word.iter().map(|&s| self.alphabet[s as usize]).collect()
    }
}

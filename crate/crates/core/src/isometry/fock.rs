use super::{IsometryFamily, PartialMap};
use crate::error::{Error, Result};

/// Largest basis the word enumeration will build.
const MAX_WORDS: usize = 1 << 22;

/// Words over `{1..n}` of length at most `depth`, in length-then-lex order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordBasis {
    pub n: u32,
    pub depth: usize,
    pub words: Vec<Vec<u32>>,
}

impl WordBasis {
    pub fn new(n: u32, depth: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("a word basis needs n >= 1".into()));
        }
        let total = Self::count(n, depth)
            .filter(|&c| c <= MAX_WORDS)
            .ok_or_else(|| {
                Error::Precondition(format!(
                    "{n} generators at depth {depth} give more than {MAX_WORDS} words"
                ))
            })?;
        let mut words = Vec::with_capacity(total);
        words.push(Vec::new());
        let mut level_start = 0;
        for _ in 0..depth {
            let level_end = words.len();
            for i in level_start..level_end {
                for letter in 1..=n {
                    let mut w = words[i].clone();
                    w.push(letter);
                    words.push(w);
                }
            }
            level_start = level_end;
        }
        Ok(Self { n, depth, words })
    }

    /// `sum_{l <= depth} n^l`, or `None` on overflow.
    pub fn count(n: u32, depth: usize) -> Option<usize> {
        let n = n as usize;
        let mut total: usize = 0;
        let mut power: usize = 1;
        for _ in 0..=depth {
            total = total.checked_add(power)?;
            power = power.checked_mul(n)?;
        }
        Some(total)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Position of `word`, if it is in the basis.
    pub fn index(&self, word: &[u32]) -> Option<usize> {
        if word.len() > self.depth || word.iter().any(|&c| c == 0 || c > self.n) {
            return None;
        }
        let n = self.n as usize;
        let offset = Self::count(self.n, word.len()).unwrap() - n.pow(word.len() as u32);
        let rank = word.iter().fold(0, |acc, &c| acc * n + (c as usize - 1));
        Some(offset + rank)
    }

    /// `∅` for the empty word, otherwise letters joined by dots.
    pub fn label(word: &[u32]) -> String {
        if word.is_empty() {
            "∅".into()
        } else {
            word.iter().map(u32::to_string).collect::<Vec<_>>().join(".")
        }
    }
}

/// `L_v ξ_w = ξ_{vw}` for `v = 1..n`, from words of length `< depth` into
/// words of length `<= depth`.
pub fn fock_left_shifts(n: u32, depth: usize) -> Result<IsometryFamily> {
    if n < 2 || depth < 1 {
        return Err(Error::Precondition(format!(
            "Fock shifts need n >= 2 and depth >= 1, got n = {n}, depth = {depth}"
        )));
    }
    let basis = WordBasis::new(n, depth)?;
    let domain_dim = WordBasis::count(n, depth - 1).unwrap();
    let members = (1..=n)
        .map(|v| {
            let pairs = basis.words[..domain_dim].iter().enumerate().map(|(i, w)| {
                let mut vw = Vec::with_capacity(w.len() + 1);
                vw.push(v);
                vw.extend_from_slice(w);
                (i, basis.index(&vw).expect("depth checked"))
            });
            PartialMap::new(format!("L{v}"), pairs)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = basis.words.iter().map(|w| WordBasis::label(w)).collect();
    IsometryFamily::new(labels, domain_dim, members)
}

//! Block codes under the zero-undetected-error decoder.
//!
//! The decoder collects every message whose codeword could have produced the
//! received block (per-position structural positivity, so long blocks never
//! underflow) and declares an erasure unless exactly one remains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dmc::{ChannelError, Dmc};

/// Largest `|Y|^n` evaluated by exact enumeration.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;
/// Candidate budget for code search.
pub const DEFAULT_SEARCH_BUDGET: u64 = 10_000_000;
/// Samples per message when search falls back to Monte Carlo.
pub const SEARCH_MC_SAMPLES: u64 = 20_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodeError {
    #[error("codebook must contain at least one codeword")]
    Empty,
    #[error("codeword {index} has length {found}, expected {expected}")]
    CodewordLength { index: usize, expected: usize, found: usize },
    #[error("codewords {first} and {second} are identical")]
    DuplicateCodeword { first: usize, second: usize },
    #[error("declared {declared} messages but {found} codewords are listed")]
    MessageCount { declared: usize, found: usize },
    #[error("codeword {index} uses input {symbol}, channel has {inputs} inputs")]
    SymbolOutOfRange { index: usize, symbol: usize, inputs: usize },
    #[error("received block has length {found}, code blocklength is {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("output symbol {symbol} out of range for {outputs} channel outputs")]
    OutputOutOfRange { symbol: usize, outputs: usize },
    #[error("no codeword can produce the received block")]
    ImpossibleOutput,
    #[error("message {message} out of range for {messages} codewords")]
    MessageOutOfRange { message: usize, messages: usize },
    #[error("enumeration needs {needed} cases, budget is {budget}")]
    BudgetExceeded { needed: String, budget: u64 },
    #[error("no code with every erasure probability below 1 was found")]
    NoValidCode,
    #[error("sample count must be positive")]
    NoSamples,
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Fixed-length code: message `m` is sent as `codewords[m]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CodebookFile", into = "CodebookFile")]
pub struct Codebook {
    n: usize,
    codewords: Vec<Vec<usize>>,
}

/// On-disk layout: `{"n": int, "messages": int, "codewords": [[int,...],...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodebookFile {
    pub n: usize,
    pub messages: usize,
    pub codewords: Vec<Vec<usize>>,
}

impl TryFrom<CodebookFile> for Codebook {
    type Error = CodeError;

    fn try_from(f: CodebookFile) -> Result<Self, Self::Error> {
        if f.messages != f.codewords.len() {
            return Err(CodeError::MessageCount {
                declared: f.messages,
                found: f.codewords.len(),
            });
        }
        Codebook::new(f.n, f.codewords)
    }
}

impl From<Codebook> for CodebookFile {
    fn from(c: Codebook) -> Self {
        CodebookFile {
            n: c.n,
            messages: c.codewords.len(),
            codewords: c.codewords,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeOutcome {
    Message(usize),
    Erasure,
}

impl DecodeOutcome {
    pub fn message(self) -> Option<usize> {
        match self {
            DecodeOutcome::Message(m) => Some(m),
            DecodeOutcome::Erasure => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum QualityMethod {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

/// Per-message erasure probabilities of a code on a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeQuality {
    pub lambda: Vec<f64>,
    pub max_lambda: f64,
    pub method: QualityMethod,
}

impl CodeQuality {
    fn new(lambda: Vec<f64>, method: QualityMethod) -> Self {
        let max_lambda = lambda.iter().copied().fold(0.0, f64::max);
        CodeQuality {
            lambda,
            max_lambda,
            method,
        }
    }

    /// Binomial standard error of `lambda[m]`; zero for exact values.
    pub fn std_error(&self, m: usize) -> f64 {
        match self.method {
            QualityMethod::Exact => 0.0,
            QualityMethod::MonteCarlo { samples, .. } => {
                let l = self.lambda[m];
                (l * (1.0 - l) / samples as f64).sqrt()
            }
        }
    }
}

/// How λ is computed by [`Codebook::evaluate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    Exact { budget: u64 },
    MonteCarlo { samples: u64, seed: u64 },
    /// Exact when `|Y|^n` fits the default budget, Monte Carlo otherwise.
    Auto { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SearchStrategy {
    Exhaustive,
    Greedy,
    Random { seed: u64 },
}

impl Codebook {
    pub fn new(n: usize, codewords: Vec<Vec<usize>>) -> Result<Self, CodeError> {
        if codewords.is_empty() {
            return Err(CodeError::Empty);
        }
        for (index, c) in codewords.iter().enumerate() {
            if c.len() != n {
                return Err(CodeError::CodewordLength {
                    index,
                    expected: n,
                    found: c.len(),
                });
            }
        }
        let mut order: Vec<usize> = (0..codewords.len()).collect();
        order.sort_by(|&a, &b| codewords[a].cmp(&codewords[b]).then(a.cmp(&b)));
        for pair in order.windows(2) {
            if codewords[pair[0]] == codewords[pair[1]] {
                return Err(CodeError::DuplicateCodeword {
                    first: pair[0].min(pair[1]),
                    second: pair[0].max(pair[1]),
                });
            }
        }
        Ok(Codebook { n, codewords })
    }

    /// Blocklength.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn messages(&self) -> usize {
        self.codewords.len()
    }

    pub fn codeword(&self, m: usize) -> &[usize] {
        &self.codewords[m]
    }

    pub fn codewords(&self) -> &[Vec<usize>] {
        &self.codewords
    }

    /// Check that every codeword symbol is a valid input of `ch`.
    pub fn check_channel(&self, ch: &Dmc) -> Result<(), CodeError> {
        for (index, c) in self.codewords.iter().enumerate() {
            if let Some(&symbol) = c.iter().find(|&&s| s >= ch.input_size()) {
                return Err(CodeError::SymbolOutOfRange {
                    index,
                    symbol,
                    inputs: ch.input_size(),
                });
            }
        }
        Ok(())
    }

    fn check_block(&self, ch: &Dmc, y: &[usize]) -> Result<(), CodeError> {
        if y.len() != self.n {
            return Err(CodeError::LengthMismatch {
                expected: self.n,
                found: y.len(),
            });
        }
        if let Some(&symbol) = y.iter().find(|&&s| s >= ch.output_size()) {
            return Err(CodeError::OutputOutOfRange {
                symbol,
                outputs: ch.output_size(),
            });
        }
        self.check_channel(ch)
    }

    #[inline]
    fn compatible(&self, ch: &Dmc, m: usize, y: &[usize]) -> bool {
        self.codewords[m].iter().zip(y).all(|(&x, &yy)| ch.can_produce(x, yy))
    }

    /// Messages whose codeword can produce `y`, in increasing order.
    pub fn probable_messages(&self, ch: &Dmc, y: &[usize]) -> Result<Vec<usize>, CodeError> {
        self.check_block(ch, y)?;
        Ok((0..self.messages()).filter(|&m| self.compatible(ch, m, y)).collect())
    }

    /// Zero-undetected-error decoding of `y`.
    pub fn zue_decode(&self, ch: &Dmc, y: &[usize]) -> Result<DecodeOutcome, CodeError> {
        self.check_block(ch, y)?;
        self.decode_unchecked(ch, y)
    }

    /// Decoding without the length and alphabet checks; callers guarantee them.
    pub(crate) fn decode_unchecked(&self, ch: &Dmc, y: &[usize]) -> Result<DecodeOutcome, CodeError> {
        let mut found = None;
        for m in 0..self.messages() {
            if self.compatible(ch, m, y) {
                if found.is_some() {
                    return Ok(DecodeOutcome::Erasure);
                }
                found = Some(m);
            }
        }
        found.map(DecodeOutcome::Message).ok_or(CodeError::ImpossibleOutput)
    }

    fn check_message(&self, m: usize) -> Result<(), CodeError> {
        if m >= self.messages() {
            return Err(CodeError::MessageOutOfRange {
                message: m,
                messages: self.messages(),
            });
        }
        Ok(())
    }

    /// Exact erasure probability of message `m`, summing over every output
    /// block `m` can produce. Requires `|Y|^n <= budget`.
    pub fn erasure_prob_exact(&self, ch: &Dmc, m: usize, budget: u64) -> Result<f64, CodeError> {
        self.check_message(m)?;
        self.check_channel(ch)?;
        check_budget(ch.output_size() as u64, self.n as u64, budget)?;
        if self.messages() == 1 {
            return Ok(0.0);
        }
        // Summing the ambiguous blocks can land a rounding step short of 1.
        if !self.can_decode_uniquely(ch, m)? {
            return Ok(1.0);
        }
        let word = &self.codewords[m];
        let supports: Vec<&[usize]> = word.iter().map(|&x| ch.support(x)).collect();
        let mut digits = vec![0usize; self.n];
        let mut y: Vec<usize> = supports.iter().map(|s| s[0]).collect();
        let mut erased = 0.0;
        loop {
            let ambiguous = (0..self.messages()).any(|other| other != m && self.compatible(ch, other, &y));
            if ambiguous {
                erased += word.iter().zip(&y).map(|(&x, &yy)| ch.prob(x, yy)).product::<f64>();
            }
            // Odometer over the per-position supports.
            let mut pos = self.n;
            loop {
                if pos == 0 {
                    return Ok(erased.min(1.0));
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < supports[pos].len() {
                    y[pos] = supports[pos][digits[pos]];
                    break;
                }
                digits[pos] = 0;
                y[pos] = supports[pos][0];
            }
        }
    }

    /// Whether some output block producible by `m` excludes every other
    /// codeword, i.e. `λ_m < 1`. Decided from the zero pattern alone.
    pub fn can_decode_uniquely(&self, ch: &Dmc, m: usize) -> Result<bool, CodeError> {
        self.check_message(m)?;
        self.check_channel(ch)?;
        let rivals: Vec<usize> = (0..self.messages()).filter(|&k| k != m).collect();
        Ok(self.separates(ch, m, 0, &rivals))
    }

    fn separates(&self, ch: &Dmc, m: usize, pos: usize, rivals: &[usize]) -> bool {
        if rivals.is_empty() {
            return true;
        }
        if pos == self.n {
            return false;
        }
        let x = self.codewords[m][pos];
        let mut tried: Vec<Vec<usize>> = Vec::new();
        for &y in ch.support(x) {
            let alive: Vec<usize> = rivals
                .iter()
                .copied()
                .filter(|&k| ch.can_produce(self.codewords[k][pos], y))
                .collect();
            // Outputs leaving the same rivals alive lead to the same subproblem.
            if tried.contains(&alive) {
                continue;
            }
            if self.separates(ch, m, pos + 1, &alive) {
                return true;
            }
            tried.push(alive);
        }
        false
    }

    /// Fraction of `samples` transmissions of `m` decoded as erasure.
    pub fn erasure_prob_mc(&self, ch: &Dmc, m: usize, samples: u64, seed: u64) -> Result<f64, CodeError> {
        self.check_message(m)?;
        self.check_channel(ch)?;
        if samples == 0 {
            return Err(CodeError::NoSamples);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(m as u64);
        let mut y = Vec::with_capacity(self.n);
        let mut erasures = 0u64;
        for _ in 0..samples {
            y.clear();
            ch.transmit_into(&self.codewords[m], &mut rng, &mut y)?;
            match self.decode_unchecked(ch, &y)? {
                DecodeOutcome::Erasure => erasures += 1,
                DecodeOutcome::Message(d) => debug_assert_eq!(d, m),
            }
        }
        Ok(erasures as f64 / samples as f64)
    }

    /// λ for every message.
    pub fn evaluate(&self, ch: &Dmc, method: EvalMethod) -> Result<CodeQuality, CodeError> {
        let method = match method {
            EvalMethod::Auto { samples, seed } => {
                if check_budget(ch.output_size() as u64, self.n as u64, DEFAULT_ENUMERATION_BUDGET).is_ok() {
                    EvalMethod::Exact {
                        budget: DEFAULT_ENUMERATION_BUDGET,
                    }
                } else {
                    EvalMethod::MonteCarlo { samples, seed }
                }
            }
            other => other,
        };
        match method {
            EvalMethod::Exact { budget } => {
                let lambda = (0..self.messages())
                    .map(|m| self.erasure_prob_exact(ch, m, budget))
                    .collect::<Result<_, _>>()?;
                Ok(CodeQuality::new(lambda, QualityMethod::Exact))
            }
            EvalMethod::MonteCarlo { samples, seed } => {
                let lambda = (0..self.messages())
                    .map(|m| self.erasure_prob_mc(ch, m, samples, seed))
                    .collect::<Result<_, _>>()?;
                Ok(CodeQuality::new(lambda, QualityMethod::MonteCarlo { samples, seed }))
            }
            EvalMethod::Auto { .. } => unreachable!(),
        }
    }

    /// Stable content hash of the codebook.
    pub fn content_hash(&self) -> String {
        crate::files::content_hash(&CodebookFile::from(self.clone()))
    }
}

fn check_budget(base: u64, exp: u64, budget: u64) -> Result<(), CodeError> {
    let needed = u32::try_from(exp).ok().and_then(|e| base.checked_pow(e));
    match needed {
        Some(k) if k <= budget => Ok(()),
        Some(k) => Err(CodeError::BudgetExceeded {
            needed: k.to_string(),
            budget,
        }),
        None => Err(CodeError::BudgetExceeded {
            needed: format!("{base}^{exp}"),
            budget,
        }),
    }
}

/// Codeword with integer index `idx` in base `|X|`, most significant symbol first.
fn codeword_of(idx: u64, n: usize, q: u64) -> Vec<usize> {
    let mut word = vec![0usize; n];
    let mut rest = idx;
    for slot in word.iter_mut().rev() {
        *slot = (rest % q) as usize;
        rest /= q;
    }
    word
}

fn max_lambda_bounded(code: &Codebook, ch: &Dmc, method: EvalMethod, bound: f64) -> Result<f64, CodeError> {
    // Stops early once some λ_m reaches `bound`.
    let mut worst: f64 = 0.0;
    for m in 0..code.messages() {
        let l = match method {
            EvalMethod::Exact { budget } => code.erasure_prob_exact(ch, m, budget)?,
            EvalMethod::MonteCarlo { samples, seed } => code.erasure_prob_mc(ch, m, samples, seed)?,
            EvalMethod::Auto { .. } => unreachable!(),
        };
        worst = worst.max(l);
        if worst >= bound {
            break;
        }
    }
    Ok(worst)
}

/// Search for a code of `m_count` codewords of length `n` minimizing the largest λ.
pub fn search_code(
    ch: &Dmc,
    n: usize,
    m_count: usize,
    strategy: SearchStrategy,
    budget: u64,
) -> Result<(Codebook, CodeQuality), CodeError> {
    let q = ch.input_size() as u64;
    let total = u32::try_from(n).ok().and_then(|e| q.checked_pow(e));
    if m_count == 0 {
        return Err(CodeError::Empty);
    }
    if total.is_some_and(|t| (m_count as u64) > t) {
        return Err(CodeError::NoValidCode);
    }
    let eval = if check_budget(ch.output_size() as u64, n as u64, DEFAULT_ENUMERATION_BUDGET).is_ok() {
        EvalMethod::Exact {
            budget: DEFAULT_ENUMERATION_BUDGET,
        }
    } else {
        EvalMethod::MonteCarlo {
            samples: SEARCH_MC_SAMPLES,
            seed: 0,
        }
    };

    let best = match strategy {
        SearchStrategy::Exhaustive => {
            check_budget(q, (n * m_count) as u64, budget)?;
            let total = total.expect("bounded by budget");
            exhaustive(ch, n, m_count, total, eval)?
        }
        SearchStrategy::Greedy => {
            let total = total.filter(|t| t.saturating_mul(m_count as u64) <= budget).ok_or_else(|| {
                CodeError::BudgetExceeded {
                    needed: format!("{q}^{n} x {m_count}"),
                    budget,
                }
            })?;
            greedy(ch, n, m_count, total, eval)?
        }
        SearchStrategy::Random { seed } => random(ch, n, m_count, q, budget, seed, eval)?,
    };

    match best {
        Some((code, worst)) if worst < 1.0 => {
            let quality = code.evaluate(ch, eval)?;
            debug_assert!((quality.max_lambda - worst).abs() < 1e-12);
            Ok((code, quality))
        }
        _ => Err(CodeError::NoValidCode),
    }
}

fn exhaustive(ch: &Dmc, n: usize, m_count: usize, total: u64, eval: EvalMethod) -> Result<Option<(Codebook, f64)>, CodeError> {
    // Lexicographic walk over strictly increasing index tuples.
    let mut idx: Vec<u64> = (0..m_count as u64).collect();
    let mut best: Option<(Codebook, f64)> = None;
    loop {
        let words = idx.iter().map(|&i| codeword_of(i, n, ch.input_size() as u64)).collect();
        let code = Codebook::new(n, words)?;
        let bound = best.as_ref().map_or(f64::INFINITY, |b| b.1);
        let worst = max_lambda_bounded(&code, ch, eval, bound)?;
        if worst < bound {
            let perfect = worst == 0.0;
            best = Some((code, worst));
            if perfect {
                break;
            }
        }
        let mut i = m_count;
        loop {
            if i == 0 {
                return Ok(best);
            }
            i -= 1;
            if idx[i] < total - (m_count - i) as u64 {
                idx[i] += 1;
                for j in i + 1..m_count {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
    Ok(best)
}

fn greedy(ch: &Dmc, n: usize, m_count: usize, total: u64, eval: EvalMethod) -> Result<Option<(Codebook, f64)>, CodeError> {
    let q = ch.input_size() as u64;
    let mut chosen: Vec<u64> = vec![0];
    let mut worst = 0.0;
    while chosen.len() < m_count {
        let mut step: Option<(u64, f64)> = None;
        for cand in 0..total {
            if chosen.contains(&cand) {
                continue;
            }
            let words = chosen.iter().chain(std::iter::once(&cand)).map(|&i| codeword_of(i, n, q)).collect();
            let code = Codebook::new(n, words)?;
            let bound = step.map_or(f64::INFINITY, |s| s.1);
            let w = max_lambda_bounded(&code, ch, eval, bound)?;
            if w < bound {
                step = Some((cand, w));
            }
        }
        let (cand, w) = step.ok_or(CodeError::NoValidCode)?;
        chosen.push(cand);
        worst = w;
    }
    let words = chosen.iter().map(|&i| codeword_of(i, n, q)).collect();
    Ok(Some((Codebook::new(n, words)?, worst)))
}

fn random(
    ch: &Dmc,
    n: usize,
    m_count: usize,
    q: u64,
    budget: u64,
    seed: u64,
    eval: EvalMethod,
) -> Result<Option<(Codebook, f64)>, CodeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Codebook, f64)> = None;
    for _ in 0..budget.max(1) {
        let mut words: Vec<Vec<usize>> = Vec::with_capacity(m_count);
        while words.len() < m_count {
            let w: Vec<usize> = (0..n).map(|_| rng.random_range(0..q) as usize).collect();
            if !words.contains(&w) {
                words.push(w);
            }
        }
        let code = Codebook::new(n, words)?;
        let bound = best.as_ref().map_or(f64::INFINITY, |b| b.1);
        let worst = max_lambda_bounded(&code, ch, eval, bound)?;
        if worst < bound {
            best = Some((code, worst));
        }
    }
    Ok(best)
}

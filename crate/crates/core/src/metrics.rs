//! Corpus-level caption metrics over word tokens: clipped n-gram precision,
//! cumulative BLEU-1..4 with brevity penalty and add-one smoothing, and an
//! exact-match-only METEOR.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A generated sentence and its human references, as word tokens.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalPair {
    pub candidate: Vec<String>,
    pub references: Vec<Vec<String>>,
}

impl EvalPair {
    pub fn new(candidate: Vec<String>, references: Vec<Vec<String>>) -> Result<Self> {
        if references.is_empty() {
            return Err(Error::InvalidConfig("an evaluation pair needs at least one reference".into()));
        }
        Ok(EvalPair { candidate, references })
    }

    /// Convenience for whitespace-separated strings.
    pub fn from_strs(candidate: &str, references: &[&str]) -> Result<Self> {
        let split = |s: &str| s.split_whitespace().map(str::to_owned).collect::<Vec<_>>();
        Self::new(split(candidate), references.iter().map(|r| split(r)).collect())
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Clipped matches over total candidate n-grams, summed over the corpus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClippedPrecision {
    pub clipped: usize,
    pub total: usize,
}

impl ClippedPrecision {
    /// `clipped / total`, or 0 when no candidate has `n` tokens.
    pub fn value(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.clipped as f64 / self.total as f64
        }
    }

    /// Set when every candidate was shorter than `n`.
    pub fn degenerate(&self) -> bool {
        self.total == 0
    }
}

/// Modified n-gram precision: each candidate n-gram count is capped at its
/// largest count in any single reference.
pub fn clipped_precision_n(pairs: &[EvalPair], n: usize) -> Result<ClippedPrecision> {
    if n == 0 {
        return Err(Error::InvalidConfig("n-gram order must be at least 1".into()));
    }
    let mut clipped = 0;
    let mut total = 0;
    for pair in pairs {
        let cand = ngram_counts(&pair.candidate, n);
        let mut max_ref: HashMap<&[String], usize> = HashMap::new();
        for r in &pair.references {
            for (gram, c) in ngram_counts(r, n) {
                let m = max_ref.entry(gram).or_insert(0);
                *m = (*m).max(c);
            }
        }
        for (gram, c) in cand {
            total += c;
            clipped += c.min(max_ref.get(gram).copied().unwrap_or(0));
        }
    }
    Ok(ClippedPrecision { clipped, total })
}

/// Sum over pairs of the reference length closest to the candidate length
/// (shorter reference on ties).
fn closest_reference_length(pairs: &[EvalPair]) -> usize {
    pairs
        .iter()
        .map(|p| {
            let c = p.candidate.len() as i64;
            p.references.iter().map(|r| r.len() as i64).min_by_key(|&r| ((r - c).abs(), r)).unwrap_or(0) as usize
        })
        .sum()
}

/// Brevity penalty `min(1, exp(1 - r/c))`.
pub fn brevity_penalty(candidate_len: usize, reference_len: usize) -> f64 {
    if candidate_len == 0 {
        return 0.0;
    }
    if candidate_len > reference_len {
        1.0
    } else {
        (1.0 - reference_len as f64 / candidate_len as f64).exp()
    }
}

/// Cumulative BLEU-n on a 0..100 scale. Zero matches at orders 2 and above
/// are add-one smoothed; zero unigram matches give 0.
pub fn bleu_cumulative(pairs: &[EvalPair], n: usize, use_brevity_penalty: bool) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidConfig(format!("BLEU order must be 1..=4, got {n}")));
    }
    let mut log_sum = 0.0;
    for order in 1..=n {
        let p = clipped_precision_n(pairs, order)?;
        let precision = if p.clipped > 0 {
            p.value()
        } else if order >= 2 {
            1.0 / (p.total as f64 + 1.0)
        } else {
            return Ok(0.0);
        };
        log_sum += precision.ln();
    }
    let mut score = (log_sum / n as f64).exp();
    if use_brevity_penalty {
        let c: usize = pairs.iter().map(|p| p.candidate.len()).sum();
        score *= brevity_penalty(c, closest_reference_length(pairs));
    }
    Ok(100.0 * score)
}

/// Search states explored before [`align_exact`] settles for the greedy
/// alignment.
const ALIGN_STATE_LIMIT: usize = 20_000;

/// Best unigram alignment: `(matches, chunks)` with the most exact matches
/// and, among those, the fewest contiguous chunks. The search is exact for
/// references up to 64 tokens whose repeated words keep it under a fixed
/// state budget; otherwise a greedy pass that still reaches the maximum
/// match count is used.
pub fn align_exact(candidate: &[String], reference: &[String]) -> (usize, usize) {
    if reference.len() > 64 {
        return align_greedy(candidate, reference);
    }
    let mut search = AlignSearch {
        cand: candidate,
        refr: reference,
        memo: HashMap::new(),
    };
    let matches = search.max_matches();
    match search.fewest_chunks(0, 0, None) {
        Some(chunks) => (matches, chunks),
        None => align_greedy(candidate, reference),
    }
}

struct AlignSearch<'a> {
    cand: &'a [String],
    refr: &'a [String],
    memo: HashMap<(usize, u64, Option<usize>), usize>,
}

impl AlignSearch<'_> {
    fn max_matches(&self) -> usize {
        let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
        for w in self.cand {
            counts.entry(w).or_default().0 += 1;
        }
        for w in self.refr {
            counts.entry(w).or_default().1 += 1;
        }
        counts.values().map(|&(c, r)| c.min(r)).sum()
    }

    /// A maximal matching may leave token `i` unmatched only if the later
    /// copies of its word can still use up every free reference copy.
    fn may_skip(&self, i: usize, used: u64) -> bool {
        let w = &self.cand[i];
        let later = self.cand[i + 1..].iter().filter(|x| *x == w).count();
        let free = self.refr.iter().enumerate().filter(|&(j, x)| x == w && used & (1 << j) == 0).count();
        later >= free
    }

    /// Fewest chunks over maximal matchings of `cand[i..]` given the
    /// reference positions in `used` and the position matched by `cand[i-1]`.
    /// `None` once the state budget is spent.
    fn fewest_chunks(&mut self, i: usize, used: u64, prev: Option<usize>) -> Option<usize> {
        if i == self.cand.len() {
            return Some(0);
        }
        if let Some(&v) = self.memo.get(&(i, used, prev)) {
            return Some(v);
        }
        if self.memo.len() >= ALIGN_STATE_LIMIT {
            return None;
        }
        let mut best = usize::MAX;
        if self.may_skip(i, used) {
            best = self.fewest_chunks(i + 1, used, None)?;
        }
        for j in 0..self.refr.len() {
            if used & (1 << j) != 0 || self.refr[j] != self.cand[i] {
                continue;
            }
            let rest = self.fewest_chunks(i + 1, used | (1 << j), Some(j))?;
            let new_chunk = usize::from(prev.is_none_or(|p| p + 1 != j));
            best = best.min(rest + new_chunk);
        }
        self.memo.insert((i, used, prev), best);
        Some(best)
    }
}

/// Left to right, continuing the current chunk when the next reference token
/// matches and otherwise taking the first unused occurrence.
fn align_greedy(candidate: &[String], reference: &[String]) -> (usize, usize) {
    let mut used = vec![false; reference.len()];
    let mut matches = 0;
    let mut chunks = 0;
    let mut prev: Option<usize> = None;
    for word in candidate {
        let next = prev.map(|p| p + 1).filter(|&j| j < reference.len() && !used[j] && reference[j] == *word);
        let hit = next.or_else(|| (0..reference.len()).find(|&j| !used[j] && reference[j] == *word));
        match hit {
            Some(j) => {
                used[j] = true;
                matches += 1;
                if prev.is_none_or(|p| p + 1 != j) {
                    chunks += 1;
                }
                prev = Some(j);
            }
            None => prev = None,
        }
    }
    (matches, chunks)
}

fn meteor_against(candidate: &[String], reference: &[String]) -> f64 {
    let (m, chunks) = align_exact(candidate, reference);
    if m == 0 {
        return 0.0;
    }
    let precision = m as f64 / candidate.len() as f64;
    let recall = m as f64 / reference.len() as f64;
    let f_mean = 10.0 * precision * recall / (recall + 9.0 * precision);
    let penalty = 0.5 * (chunks as f64 / m as f64).powi(3);
    f_mean * (1.0 - penalty)
}

/// METEOR of one pair in `[0, 1]`, taking the best-scoring reference.
pub fn meteor_sentence(pair: &EvalPair) -> f64 {
    pair.references.iter().map(|r| meteor_against(&pair.candidate, r)).fold(0.0, f64::max)
}

/// Mean sentence METEOR over the corpus on a 0..100 scale. Matching is exact
/// surface form only: no stemming, no synonyms.
pub fn meteor_simplified(pairs: &[EvalPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let total: f64 = pairs.iter().map(meteor_sentence).sum();
    Ok(100.0 * total / pairs.len() as f64)
}

/// BLEU-1..4 and METEOR for one decoding configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub bleu_1: f64,
    pub bleu_2: f64,
    pub bleu_3: f64,
    pub bleu_4: f64,
    pub meteor: f64,
    pub n_sentences: usize,
}

pub fn evaluate_corpus(pairs: &[EvalPair]) -> Result<MetricsReport> {
    Ok(MetricsReport {
        bleu_1: bleu_cumulative(pairs, 1, true)?,
        bleu_2: bleu_cumulative(pairs, 2, true)?,
        bleu_3: bleu_cumulative(pairs, 3, true)?,
        bleu_4: bleu_cumulative(pairs, 4, true)?,
        meteor: meteor_simplified(pairs)?,
        n_sentences: pairs.len(),
    })
}

impl MetricsReport {
    pub fn scores(&self) -> [f64; 5] {
        [self.bleu_1, self.bleu_2, self.bleu_3, self.bleu_4, self.meteor]
    }

    /// Plain-text table with one row labelled by the search method.
    pub fn render_table(&self, search: &str) -> String {
        let width = search.len().max(6);
        let mut out = String::new();
        let rule = format!("+{}+--------+--------+--------+--------+--------+\n", "-".repeat(width + 2));
        out.push_str(&rule);
        out.push_str(&format!("| {:<width$} | BLEU-1 | BLEU-2 | BLEU-3 | BLEU-4 | METEOR |\n", "Search"));
        out.push_str(&rule);
        out.push_str(&format!("| {search:<width$} |"));
        for s in self.scores() {
            out.push_str(&format!(" {s:>6.2} |"));
        }
        out.push('\n');
        out.push_str(&rule);
        out
    }

    /// `BLEU1=..;BLEU2=..;BLEU3=..;BLEU4=..;METEOR=..;N=..`
    pub fn machine_line(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "BLEU1={:.2};BLEU2={:.2};BLEU3={:.2};BLEU4={:.2};METEOR={:.2};N={}",
            self.bleu_1, self.bleu_2, self.bleu_3, self.bleu_4, self.meteor, self.n_sentences
        )
    }
}

impl FromStr for MetricsReport {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidConfig(format!("malformed metrics line ({why}): {line:?}"));
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for part in line.trim().split(';') {
            let (k, v) = part.split_once('=').ok_or_else(|| bad("missing `=`"))?;
            fields.insert(k, v);
        }
        let num = |k: &str| -> Result<f64> { fields.get(k).ok_or_else(|| bad(k))?.parse::<f64>().map_err(|_| bad(k)) };
        Ok(MetricsReport {
            bleu_1: num("BLEU1")?,
            bleu_2: num("BLEU2")?,
            bleu_3: num("BLEU3")?,
            bleu_4: num("BLEU4")?,
            meteor: num("METEOR")?,
            n_sentences: fields.get("N").ok_or_else(|| bad("N"))?.parse().map_err(|_| bad("N"))?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    /// Independent clipped-count oracle: for every candidate position, count
    /// how many earlier positions hold the same n-gram and compare against the
    /// best single-reference count by linear scan.
    fn brute_clipped(cand: &[String], refs: &[Vec<String>], n: usize) -> (usize, usize) {
        if cand.len() < n {
            return (0, 0);
        }
        let grams: Vec<&[String]> = (0..=cand.len() - n).map(|i| &cand[i..i + n]).collect();
        let mut clipped = 0;
        for (i, g) in grams.iter().enumerate() {
            let seen_before = grams[..i].iter().filter(|h| h == &g).count();
            let best_ref = refs
                .iter()
                .map(|r| {
                    if r.len() < n {
                        0
                    } else {
                        (0..=r.len() - n).filter(|&j| &r[j..j + n] == *g).count()
                    }
                })
                .max()
                .unwrap_or(0);
            if seen_before < best_ref {
                clipped += 1;
            }
        }
        (clipped, grams.len())
    }

    #[test]
    fn clipping_fixture() {
        let pairs = [EvalPair::from_strs("a a a a a a a", &["a b c d a e"]).unwrap()];
        let p = clipped_precision_n(&pairs, 1).unwrap();
        assert_eq!((p.clipped, p.total), (2, 7));
        assert_eq!(p.value(), 2.0 / 7.0);
    }

    #[test]
    fn identical_candidate_has_unit_precision() {
        let pairs = [EvalPair::from_strs("নদীতে নৌকা চলছে ।", &["নদীতে নৌকা চলছে ।"]).unwrap()];
        for n in 1..=4 {
            assert_eq!(clipped_precision_n(&pairs, n).unwrap().value(), 1.0);
        }
        let p = clipped_precision_n(&pairs, 5).unwrap();
        assert!(p.degenerate());
        assert_eq!(p.value(), 0.0);
    }

    #[test]
    fn disjoint_vocabularies_score_zero() {
        let pairs = [EvalPair::from_strs("x y z", &["a b c"]).unwrap()];
        assert_eq!(clipped_precision_n(&pairs, 1).unwrap().value(), 0.0);
        assert_eq!(bleu_cumulative(&pairs, 4, true).unwrap(), 0.0);
        assert_eq!(meteor_simplified(&pairs).unwrap(), 0.0);
    }

    #[test]
    fn bleu_brevity_fixture() {
        let pairs = [EvalPair::from_strs("a b", &["a b c d"]).unwrap()];
        let b = bleu_cumulative(&pairs, 1, true).unwrap();
        assert_abs_diff_eq!(b, 100.0 * (-1.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(b, 36.79, epsilon = 0.01);
        assert_eq!(bleu_cumulative(&pairs, 1, false).unwrap(), 100.0);
    }

    #[test]
    fn bleu_without_penalty_is_geometric_mean() {
        let pairs = [EvalPair::from_strs("the cat sat on a mat", &["the cat sat on the mat"]).unwrap()];
        let p: Vec<f64> = (1..=4).map(|n| clipped_precision_n(&pairs, n).unwrap().value()).collect();
        let geo = (p.iter().map(|x| x.ln()).sum::<f64>() / 4.0).exp();
        assert_abs_diff_eq!(bleu_cumulative(&pairs, 4, false).unwrap(), 100.0 * geo, epsilon = 1e-10);
    }

    #[test]
    fn bleu_smooths_missing_higher_orders() {
        // p1 = 2/2, p2 has 0 of 1 matches -> (0+1)/(1+1)
        let pairs = [EvalPair::from_strs("b a", &["a b"]).unwrap()];
        let b2 = bleu_cumulative(&pairs, 2, false).unwrap();
        assert_abs_diff_eq!(b2, 100.0 * (0.5f64).sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn bleu_errors() {
        assert!(matches!(bleu_cumulative(&[], 1, true), Err(Error::EmptyCorpus)));
        let pairs = [EvalPair::from_strs("a", &["a"]).unwrap()];
        assert!(bleu_cumulative(&pairs, 5, true).is_err());
        assert!(EvalPair::new(toks("a"), vec![]).is_err());
    }

    #[test]
    fn meteor_fixtures() {
        let same = [EvalPair::from_strs("a b c d", &["a b c d"]).unwrap()];
        assert_abs_diff_eq!(meteor_simplified(&same).unwrap(), 100.0 * (1.0 - 0.5 / 64.0), epsilon = 1e-12);
        assert_abs_diff_eq!(meteor_simplified(&same).unwrap(), 99.22, epsilon = 0.01);

        let swapped = [EvalPair::from_strs("a b", &["b a"]).unwrap()];
        assert_abs_diff_eq!(meteor_simplified(&swapped).unwrap(), 50.0, epsilon = 1e-12);
        assert!(matches!(meteor_simplified(&[]), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn alignment_minimizes_chunks_among_maximal_matchings() {
        // Matching the first "a" to reference position 0 would split the
        // run; the optimal alignment uses one chunk.
        assert_eq!(align_exact(&toks("a b"), &toks("a x a b")), (2, 1));
        assert_eq!(align_exact(&toks("a a a"), &toks("a b a")), (2, 2));
        assert_eq!(align_exact(&toks("x"), &toks("a")), (0, 0));
    }

    #[test]
    fn repetitive_sentences_stay_tractable() {
        let cand = toks(&"a b ".repeat(20));
        let refr = toks(&"b a ".repeat(20));
        let started = std::time::Instant::now();
        let (m, chunks) = align_exact(&cand, &refr);
        assert!(started.elapsed().as_secs() < 5);
        assert_eq!(m, 40);
        assert!((1..=40).contains(&chunks));
        assert_eq!(align_greedy(&toks("a b a b"), &toks("b a b a")), (4, 2));
    }

    #[test]
    fn meteor_takes_best_reference() {
        let pair = EvalPair::from_strs("a b c", &["z", "a b c"]).unwrap();
        assert_abs_diff_eq!(meteor_sentence(&pair), 1.0 - 0.5 / 27.0, epsilon = 1e-12);
    }

    #[test]
    fn self_reference_corpus_scores_full_marks() {
        let pairs: Vec<EvalPair> = ["ছেলেটি নদীতে সাঁতার কাটছে ।", "দুটি নৌকা ঘাটে বাঁধা আছে ।", "a b c d e"]
            .iter()
            .map(|s| EvalPair::from_strs(s, &[s, "unrelated words here"]).unwrap())
            .collect();
        let r = evaluate_corpus(&pairs).unwrap();
        assert_eq!([r.bleu_1, r.bleu_2, r.bleu_3, r.bleu_4], [100.0; 4]);
        assert!(r.meteor > 99.0);
        assert_eq!(r.n_sentences, 3);
    }

    #[test]
    fn hand_computed_mini_corpus() {
        // pair 1: cand "a b c" vs ref "a b d e": p1 2/3, p2 1/2, p3 0/1
        // pair 2: cand "x y" vs ref "x y": p1 2/2, p2 1/1, p3 0/0
        // corpus: p1 = 4/5, p2 = 2/3, p3 = 0/1 -> smoothed 1/2, p4 = 0/0 -> 1/1
        // c = 5, r = 4 + 2 = 6, BP = exp(1 - 6/5)
        let pairs = [
            EvalPair::from_strs("a b c", &["a b d e"]).unwrap(),
            EvalPair::from_strs("x y", &["x y"]).unwrap(),
        ];
        let bp = (1.0f64 - 6.0 / 5.0).exp();
        let r = evaluate_corpus(&pairs).unwrap();
        assert_abs_diff_eq!(r.bleu_1, 100.0 * bp * 0.8, epsilon = 1e-10);
        assert_abs_diff_eq!(r.bleu_2, 100.0 * bp * (0.8f64 * 2.0 / 3.0).sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(r.bleu_3, 100.0 * bp * (0.8f64 * 2.0 / 3.0 * 0.5).cbrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(r.bleu_4, 100.0 * bp * (0.8f64 * 2.0 / 3.0 * 0.5 * 1.0).powf(0.25), epsilon = 1e-10);

        // METEOR pair 1: m=2, P=2/3, R=1/2, chunks 1; pair 2: m=2, P=R=1, chunks 1
        let f1 = 10.0 * (2.0 / 3.0) * 0.5 / (0.5 + 9.0 * 2.0 / 3.0);
        let s1 = f1 * (1.0 - 0.5 * (0.5f64).powi(3));
        let s2 = 1.0 - 0.5 * (0.5f64).powi(3);
        assert_abs_diff_eq!(r.meteor, 100.0 * (s1 + s2) / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn report_rendering_and_parsing() {
        let r = MetricsReport {
            bleu_1: 42.58,
            bleu_2: 27.95,
            bleu_3: 23.66,
            bleu_4: 16.41,
            meteor: 28.7,
            n_sentences: 1000,
        };
        let line = r.machine_line();
        assert_eq!(line, "BLEU1=42.58;BLEU2=27.95;BLEU3=23.66;BLEU4=16.41;METEOR=28.70;N=1000");
        assert_eq!(line.parse::<MetricsReport>().unwrap(), r);
        let table = r.render_table("BEAM-3");
        let header = table.lines().nth(1).unwrap();
        let order: Vec<usize> = ["BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "METEOR"]
            .iter()
            .map(|h| header.find(h).unwrap())
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
        assert!(table.contains("| BEAM-3 |  42.58 |  27.95 |  23.66 |  16.41 |  28.70 |"));
        assert!("BLEU1=1".parse::<MetricsReport>().is_err());
    }

    fn word() -> impl Strategy<Value = String> {
        proptest::sample::select(&["a", "b", "c", "d"][..]).prop_map(str::to_owned)
    }

    fn sentence(max: usize) -> impl Strategy<Value = Vec<String>> {
        proptest::collection::vec(word(), 0..max)
    }

    fn pair() -> impl Strategy<Value = EvalPair> {
        (sentence(7), proptest::collection::vec(sentence(7), 1..4)).prop_map(|(c, r)| EvalPair::new(c, r).unwrap())
    }

    proptest! {
        #[test]
        fn clipped_counts_match_brute_force(pairs in proptest::collection::vec(pair(), 1..4), n in 1usize..4) {
            let p = clipped_precision_n(&pairs, n).unwrap();
            let (mut c, mut t) = (0, 0);
            for pr in &pairs {
                let (a, b) = brute_clipped(&pr.candidate, &pr.references, n);
                c += a;
                t += b;
            }
            prop_assert_eq!((p.clipped, p.total), (c, t));
            prop_assert!((0.0..=1.0).contains(&p.value()));
        }

        #[test]
        fn extra_reference_never_lowers_precision(p in pair(), extra in sentence(7), n in 1usize..4) {
            let before = clipped_precision_n(std::slice::from_ref(&p), n).unwrap().value();
            let mut q = p.clone();
            q.references.push(extra);
            prop_assert!(clipped_precision_n(&[q], n).unwrap().value() >= before);
        }

        #[test]
        fn scores_ignore_corpus_order(pairs in proptest::collection::vec(pair(), 1..5)) {
            let a = evaluate_corpus(&pairs).unwrap();
            let mut rev = pairs.clone();
            rev.reverse();
            let b = evaluate_corpus(&rev).unwrap();
            for (x, y) in a.scores().iter().zip(b.scores()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn meteor_bounds(pairs in proptest::collection::vec(pair(), 1..5)) {
            let m = meteor_simplified(&pairs).unwrap();
            prop_assert!((0.0..=100.0).contains(&m));
            let any_match = pairs.iter().any(|p| p.references.iter().any(|r| p.candidate.iter().any(|w| r.contains(w))));
            prop_assert_eq!(m == 0.0, !any_match);
        }

        #[test]
        fn exact_alignment_beats_greedy(c in sentence(9), r in sentence(9)) {
            let (m, chunks) = align_exact(&c, &r);
            let (gm, gchunks) = align_greedy(&c, &r);
            prop_assert!(m >= gm);
            if m == gm {
                prop_assert!(chunks <= gchunks);
            }
        }
    }
}

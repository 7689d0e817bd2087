//! Strategy consistency (reasoning-text similarity within a type) and
//! decision coherence (lag-1 correlation of signed decisions).

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::sim::{AgentInfo, RoundRecord};

/// Words dropped before comparing texts.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "i", "in", "is", "it", "its", "of", "on",
    "or", "that", "the", "this", "to", "was", "will", "with",
];

/// Lowercase token counts, splitting on anything that is not alphanumeric.
pub fn bag_of_words(text: &str, stopwords: &HashSet<String>) -> HashMap<String, f64> {
    let mut bag = HashMap::new();
    for token in text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
        let token = token.to_lowercase();
        if !stopwords.contains(&token) {
            *bag.entry(token).or_insert(0.0) += 1.0;
        }
    }
    bag
}

/// Cosine of two count vectors; 0 when either is empty.
pub fn cosine(a: &HashMap<String, f64>, b: &HashMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

/// Mean pairwise cosine similarity; `None` with fewer than two texts.
pub fn strategy_consistency(texts: &[&str], stopwords: &HashSet<String>) -> Option<f64> {
    if texts.len() < 2 {
        return None;
    }
    let bags: Vec<_> = texts.iter().map(|t| bag_of_words(t, stopwords)).collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..bags.len() {
        for j in i + 1..bags.len() {
            total += cosine(&bags[i], &bags[j]);
            pairs += 1;
        }
    }
    Some(total / pairs as f64)
}

/// Pearson correlation of `(d_t, d_{t+1})` pairs pooled over sequences.
/// `None` when there are no pairs or either margin has zero variance.
pub fn decision_coherence(sequences: &[Vec<f64>]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = sequences.iter().flat_map(|s| s.windows(2).map(|w| (w[0], w[1]))).collect();
    if pairs.is_empty() {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeConsistency {
    pub label: String,
    pub agents: usize,
    pub decisions: usize,
    pub sc: Option<f64>,
    pub dc: Option<f64>,
}

fn groups(agents: &[AgentInfo]) -> BTreeMap<&str, Vec<usize>> {
    let mut g: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for a in agents {
        g.entry(a.label.as_str()).or_default().push(a.id.0 as usize);
    }
    g
}

/// SC and DC for every agent label.
pub fn consistency_metrics(
    agents: &[AgentInfo],
    records: &[RoundRecord],
    stopwords: &HashSet<String>,
) -> Vec<TypeConsistency> {
    let mut texts: HashMap<usize, Vec<String>> = HashMap::new();
    let mut signed: HashMap<usize, Vec<f64>> = HashMap::new();
    for d in records.iter().flat_map(|r| &r.decisions) {
        let i = d.agent.0 as usize;
        texts.entry(i).or_default().push(d.decision.full_reasoning());
        signed.entry(i).or_default().push(d.direction.signed());
    }
    groups(agents)
        .into_iter()
        .map(|(label, ids)| {
            let all: Vec<&str> =
                ids.iter().flat_map(|i| texts.get(i).into_iter().flatten()).map(String::as_str).collect();
            let seqs: Vec<Vec<f64>> = ids.iter().filter_map(|i| signed.get(i).cloned()).collect();
            TypeConsistency {
                label: label.to_string(),
                agents: ids.len(),
                decisions: all.len(),
                sc: strategy_consistency(&all, stopwords),
                dc: decision_coherence(&seqs),
            }
        })
        .collect()
}

/// Decision dispersion within agent types against the whole population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCheck {
    /// Mean over rounds of the population variance of signed decisions.
    pub pooled: f64,
    /// Mean over rounds of the size-weighted within-type variance.
    pub within: f64,
    pub rounds: usize,
}

impl VarianceCheck {
    pub fn holds(&self) -> bool {
        self.within < self.pooled
    }
}

/// Within-type and pooled variance of signed decisions (Buy +1, Hold 0,
/// Sell −1), computed per round and averaged.
pub fn variance_check(agents: &[AgentInfo], records: &[RoundRecord]) -> Option<VarianceCheck> {
    let label: HashMap<usize, &str> = agents.iter().map(|a| (a.id.0 as usize, a.label.as_str())).collect();
    let (mut pooled, mut within, mut rounds) = (0.0, 0.0, 0usize);
    for r in records.iter().filter(|r| !r.decisions.is_empty()) {
        let xs: Vec<(&str, f64)> =
            r.decisions.iter().map(|d| (label[&(d.agent.0 as usize)], d.direction.signed())).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().map(|x| x.1).sum::<f64>() / n;
        pooled += xs.iter().map(|x| (x.1 - mean).powi(2)).sum::<f64>() / n;
        let mut by_type: HashMap<&str, Vec<f64>> = HashMap::new();
        for (l, x) in &xs {
            by_type.entry(l).or_default().push(*x);
        }
        let ss: f64 = by_type
            .values()
            .map(|v| {
                let m = v.iter().sum::<f64>() / v.len() as f64;
                v.iter().map(|x| (x - m).powi(2)).sum::<f64>()
            })
            .sum();
        within += ss / n;
        rounds += 1;
    }
    (rounds > 0).then(|| VarianceCheck { pooled: pooled / rounds as f64, within: within / rounds as f64, rounds })
}

pub fn default_stopwords() -> HashSet<String> {
    DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_texts_are_fully_consistent() {
        let sw = default_stopwords();
        let t = "Price is far above the fundamental value; selling.";
        assert_eq!(strategy_consistency(&[t, t, t], &sw), Some(1.0));
        assert_eq!(strategy_consistency(&[t], &sw), None);
    }

    #[test]
    fn disjoint_texts_are_orthogonal() {
        let sw = default_stopwords();
        assert_eq!(strategy_consistency(&["buy cheap shares", "momentum trend rising"], &sw), Some(0.0));
    }

    #[test]
    fn cosine_matches_hand_count() {
        // {buy:2, now:1} vs {buy:1, later:1}: 2 / (√5·√2)
        let sw = HashSet::new();
        let a = bag_of_words("Buy buy NOW", &sw);
        let b = bag_of_words("buy, later", &sw);
        assert!((cosine(&a, &b) - 2.0 / (5f64.sqrt() * 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn alternating_decisions_are_anticorrelated() {
        let alt = vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        assert_eq!(decision_coherence(&[alt]), Some(-1.0));
        assert_eq!(decision_coherence(&[vec![1.0, 1.0, 1.0]]), None);
        assert_eq!(decision_coherence(&[vec![1.0]]), None);
        let c = decision_coherence(&[vec![1.0, 1.0, 0.0, 0.0, -1.0, -1.0]]).unwrap();
        assert!((-1.0..=1.0).contains(&c));
    }
}

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{expected_entropy, Beliefs, SelectionError};
use crate::query::Query;
use crate::scalar::FloatProbability;

/// Expected entropies closer than this are treated as equal.
pub const ENTROPY_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Strategy {
    Entropy,
    Split,
    Random { seed: u64 },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Entropy => "entropy",
            Strategy::Split => "split",
            Strategy::Random { .. } => "random",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Random { seed } => write!(f, "random:{seed}"),
            other => f.write_str(other.name()),
        }
    }
}

/// Accepts `entropy`, `split`, `random` (seed 0) and `random:<seed>`.
impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.split_once(':') {
            None => match s.as_str() {
                "entropy" => Ok(Strategy::Entropy),
                "split" => Ok(Strategy::Split),
                "random" => Ok(Strategy::Random { seed: 0 }),
                _ => Err(format!("unknown strategy `{s}`")),
            },
            Some(("random", seed)) => seed
                .parse()
                .map(|seed| Strategy::Random { seed })
                .map_err(|_| format!("invalid seed `{seed}`")),
            Some(_) => Err(format!("unknown strategy `{s}`")),
        }
    }
}

/// `||dp| − |dn|| + |d0|`.
pub fn split_score(q: &Query) -> usize {
    q.dp().len().abs_diff(q.dn().len()) + q.d0().len()
}

fn secondary(a: &Query, b: &Query) -> Ordering {
    a.sentences
        .len()
        .cmp(&b.sentences.len())
        .then_with(|| a.text().cmp(&b.text()))
}

/// Picks a query from `pool`. `rng` is consulted only by the random strategy.
pub fn select_query<'q, P: FloatProbability, R: Rng + ?Sized>(
    strategy: Strategy,
    pool: &'q [Query],
    beliefs: &Beliefs<P>,
    rng: &mut R,
) -> Result<&'q Query, SelectionError> {
    if pool.is_empty() {
        return Err(SelectionError::EmptyQueryPool);
    }
    let best = match strategy {
        Strategy::Random { .. } => &pool[rng.random_range(0..pool.len())],
        Strategy::Split => pool
            .iter()
            .min_by(|a, b| {
                split_score(a)
                    .cmp(&split_score(b))
                    .then_with(|| secondary(a, b))
            })
            .expect("nonempty pool"),
        Strategy::Entropy => {
            let tol = P::lit(ENTROPY_TIE_TOLERANCE);
            let scored: Vec<(P, &Query)> = pool
                .iter()
                .map(|q| (expected_entropy(q, beliefs), q))
                .collect();
            let min = scored
                .iter()
                .map(|(e, _)| *e)
                .fold(P::infinity(), |m, e| if e < m { e } else { m });
            scored
                .into_iter()
                .filter(|(e, _)| *e <= min + tol)
                .map(|(_, q)| q)
                .min_by(|a, b| secondary(a, b))
                .expect("nonempty pool")
        }
    };
    Ok(best)
}

/// A strategy together with the random stream it draws from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selector {
    strategy: Strategy,
    rng: ChaCha8Rng,
}

impl Selector {
    pub fn new(strategy: Strategy) -> Self {
        let seed = match strategy {
            Strategy::Random { seed } => seed,
            _ => 0,
        };
        Self {
            strategy,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn select<'q, P: FloatProbability>(
        &mut self,
        pool: &'q [Query],
        beliefs: &Beliefs<P>,
    ) -> Result<&'q Query, SelectionError> {
        select_query(self.strategy, pool, beliefs, &mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnosis::Diagnosis;
    use crate::query::{Partition, Sentence};

    fn d(i: usize) -> Diagnosis {
        Diagnosis::new([format!("D{i}")])
    }

    fn q(atoms: &[&str], dp: &[usize], dn: &[usize]) -> Query {
        let pick = |ix: &[usize]| ix.iter().map(|&i| d(i)).collect();
        Query::new(
            atoms.iter().map(|a| Sentence::literal(*a, true)),
            Partition {
                dp: pick(dp),
                dn: pick(dn),
                d0: Vec::new(),
            },
        )
    }

    fn uniform(n: usize) -> Beliefs<f64> {
        Beliefs::uniform(&(1..=n).map(d).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn entropy_prefers_even_split() {
        let pool = vec![q(&["A"], &[1], &[2, 3, 4]), q(&["B"], &[1, 2], &[3, 4])];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let best = select_query(Strategy::Entropy, &pool, &uniform(4), &mut rng).unwrap();
        assert_eq!(best.text(), "B");
    }

    #[test]
    fn ties_prefer_fewer_sentences_then_text() {
        let pool = vec![
            q(&["A", "C"], &[1, 2], &[3, 4]),
            q(&["D"], &[1, 3], &[2, 4]),
            q(&["B"], &[1, 4], &[2, 3]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for s in [Strategy::Entropy, Strategy::Split] {
            assert_eq!(
                select_query(s, &pool, &uniform(4), &mut rng)
                    .unwrap()
                    .text(),
                "B"
            );
        }
    }

    #[test]
    fn split_scores() {
        assert_eq!(split_score(&q(&["A"], &[1], &[2, 3, 4])), 2);
        assert_eq!(split_score(&q(&["A"], &[1, 2], &[3, 4])), 0);
    }

    #[test]
    fn empty_pool_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            select_query(Strategy::Split, &[], &uniform(2), &mut rng),
            Err(SelectionError::EmptyQueryPool)
        );
    }

    #[test]
    fn random_selector_is_reproducible_and_resumable() {
        let pool: Vec<Query> = ["A", "B", "C", "D", "E"]
            .iter()
            .map(|a| q(&[a], &[1], &[2]))
            .collect();
        let b = uniform(2);
        let mut s1 = Selector::new(Strategy::Random { seed: 7 });
        let mut s2 = Selector::new(Strategy::Random { seed: 7 });
        let first: Vec<String> = (0..3)
            .map(|_| s1.select(&pool, &b).unwrap().text())
            .collect();
        let again: Vec<String> = (0..3)
            .map(|_| s2.select(&pool, &b).unwrap().text())
            .collect();
        assert_eq!(first, again);

        let saved: Selector = serde_json::from_str(&serde_json::to_string(&s1).unwrap()).unwrap();
        let mut resumed = saved.clone();
        assert_eq!(
            s1.select(&pool, &b).unwrap().text(),
            resumed.select(&pool, &b).unwrap().text()
        );
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("Entropy".parse::<Strategy>(), Ok(Strategy::Entropy));
        assert_eq!(
            "random:42".parse::<Strategy>(),
            Ok(Strategy::Random { seed: 42 })
        );
        assert!("random:x".parse::<Strategy>().is_err());
        assert_eq!(Strategy::Random { seed: 3 }.to_string(), "random:3");
        assert_eq!(
            serde_json::to_string(&Strategy::Random { seed: 3 }).unwrap(),
            r#"{"kind":"random","seed":3}"#
        );
    }
}

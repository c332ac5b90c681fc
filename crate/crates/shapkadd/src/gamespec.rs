//! Built-in games named on the command line as `family:key=value,...`.
//!
//! List-valued parameters take the following comma-separated items until the
//! next `key=`, so `unanimity:n=4,S=1,2` has carrier `{1,2}`.
//!
//! | family      | parameters                         |
//! |-------------|------------------------------------|
//! | `additive`  | `c=<w1>,<w2>,...` (or bare weights) |
//! | `unanimity` | `n`, `S=<players>`                  |
//! | `glove`     | `n`, `left=<players>`               |
//! | `random`    | `n`, `seed` (uniform on `[-1, 1]`)  |
//! | `kadd`      | `n`, `k`, `seed`                    |
//! | `totalcorr` | none; data comes from `--data`      |

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shapkadd_core::{
    random_kadditive, AdditiveGame, Coalition, Game, GloveGame, PlayerCount, UnanimityGame,
    ValueTable,
};

use crate::error::{Error, Result};

pub type DynGame = Box<dyn Game + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub enum GameSpec {
    Additive(Vec<f64>),
    Unanimity { n: usize, carrier: Vec<usize> },
    Glove { n: usize, left: Vec<usize> },
    Random { n: usize, seed: u64 },
    KAdditive { n: usize, k: usize, seed: u64 },
    TotalCorrelation,
}

impl GameSpec {
    /// Player count, when the spec alone determines it.
    pub fn players(&self) -> Option<usize> {
        match self {
            GameSpec::Additive(c) => Some(c.len()),
            GameSpec::Unanimity { n, .. }
            | GameSpec::Glove { n, .. }
            | GameSpec::Random { n, .. }
            | GameSpec::KAdditive { n, .. } => Some(*n),
            GameSpec::TotalCorrelation => None,
        }
    }

    /// Builds the game; `totalcorr` is rejected here since it needs data.
    pub fn build(&self, cap: usize) -> Result<DynGame> {
        let pc = |n: usize| PlayerCount::with_cap(n, cap);
        Ok(match self {
            GameSpec::Additive(c) => Box::new(AdditiveGame::new(c.clone())?),
            GameSpec::Unanimity { n, carrier } => {
                let n = pc(*n)?;
                Box::new(UnanimityGame::new(n, Coalition::from_players(carrier, n)?)?)
            }
            GameSpec::Glove { n, left } => {
                let n = pc(*n)?;
                Box::new(GloveGame::new(n, Coalition::from_players(left, n)?)?)
            }
            GameSpec::Random { n, seed } => Box::new(ValueTable::random(
                pc(*n)?,
                &mut ChaCha8Rng::seed_from_u64(*seed),
            )?),
            GameSpec::KAdditive { n, k, seed } => Box::new(random_kadditive(
                pc(*n)?,
                *k,
                &mut ChaCha8Rng::seed_from_u64(*seed),
            )?),
            GameSpec::TotalCorrelation => {
                return Err(Error::Usage("totalcorr needs --data <csv>".into()));
            }
        })
    }
}

fn params(s: &str) -> Result<BTreeMap<String, Vec<String>>> {
    let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match tok.split_once('=') {
            Some((k, v)) => {
                let k = k.trim().to_string();
                if map.contains_key(&k) {
                    return Err(Error::Usage(format!("parameter {k:?} given twice")));
                }
                map.insert(k.clone(), vec![v.trim().to_string()]);
                current = Some(k);
            }
            None => {
                let key = current.clone().unwrap_or_default();
                map.entry(key).or_default().push(tok.to_string());
            }
        }
    }
    Ok(map)
}

fn take<T: FromStr>(
    map: &mut BTreeMap<String, Vec<String>>,
    keys: &[&str],
    family: &str,
) -> Result<Vec<T>> {
    let key = keys.iter().find(|k| map.contains_key(**k));
    let Some(key) = key else {
        return Err(Error::Usage(format!(
            "{family} needs parameter {}",
            keys[0]
        )));
    };
    map.remove(*key)
        .unwrap_or_default()
        .iter()
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| Error::Usage(format!("{family}: bad value {v:?} for {key}")))
        })
        .collect()
}

fn take_one<T: FromStr>(
    map: &mut BTreeMap<String, Vec<String>>,
    key: &str,
    family: &str,
    default: Option<T>,
) -> Result<T> {
    if !map.contains_key(key) {
        return default.ok_or_else(|| Error::Usage(format!("{family} needs parameter {key}")));
    }
    let mut v = take::<T>(map, &[key], family)?;
    if v.len() != 1 {
        return Err(Error::Usage(format!(
            "{family}: {key} takes a single value"
        )));
    }
    Ok(v.remove(0))
}

impl FromStr for GameSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        let family = family.trim();
        let mut p = params(rest)?;
        let spec = match family {
            "additive" => {
                let c = take::<f64>(&mut p, &["c", "weights", ""], family)?;
                if c.is_empty() {
                    return Err(Error::Usage("additive needs at least one weight".into()));
                }
                GameSpec::Additive(c)
            }
            "unanimity" => GameSpec::Unanimity {
                n: take_one(&mut p, "n", family, None)?,
                carrier: take(&mut p, &["S", "s", "carrier"], family)?,
            },
            "glove" => GameSpec::Glove {
                n: take_one(&mut p, "n", family, None)?,
                left: take(&mut p, &["left"], family)?,
            },
            "random" => GameSpec::Random {
                n: take_one(&mut p, "n", family, None)?,
                seed: take_one(&mut p, "seed", family, Some(0))?,
            },
            "kadd" => GameSpec::KAdditive {
                n: take_one(&mut p, "n", family, None)?,
                k: take_one(&mut p, "k", family, None)?,
                seed: take_one(&mut p, "seed", family, Some(0))?,
            },
            "totalcorr" => GameSpec::TotalCorrelation,
            other => return Err(Error::Usage(format!("unknown game family {other:?}"))),
        };
        if let Some(k) = p.keys().next() {
            return Err(Error::Usage(format!(
                "{family}: unexpected parameter {k:?}"
            )));
        }
        Ok(spec)
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameSpec::Additive(c) => write!(f, "additive:c={}", join(c)),
            GameSpec::Unanimity { n, carrier } => write!(f, "unanimity:n={n},S={}", join(carrier)),
            GameSpec::Glove { n, left } => write!(f, "glove:n={n},left={}", join(left)),
            GameSpec::Random { n, seed } => write!(f, "random:n={n},seed={seed}"),
            GameSpec::KAdditive { n, k, seed } => write!(f, "kadd:n={n},k={k},seed={seed}"),
            GameSpec::TotalCorrelation => f.write_str("totalcorr"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use shapkadd_core::exact_shapley;

    #[test]
    fn parses_families() {
        assert_eq!(
            "unanimity:n=3,S=1,2".parse::<GameSpec>().unwrap(),
            GameSpec::Unanimity {
                n: 3,
                carrier: vec![1, 2]
            }
        );
        assert_eq!(
            "glove:n=3,left=1,2".parse::<GameSpec>().unwrap(),
            GameSpec::Glove {
                n: 3,
                left: vec![1, 2]
            }
        );
        assert_eq!(
            "additive:1,2,3".parse::<GameSpec>().unwrap(),
            GameSpec::Additive(vec![1.0, 2.0, 3.0])
        );
        assert_eq!(
            "additive:c=1,2.5".parse::<GameSpec>().unwrap(),
            GameSpec::Additive(vec![1.0, 2.5])
        );
        assert_eq!(
            "random:n=5".parse::<GameSpec>().unwrap(),
            GameSpec::Random { n: 5, seed: 0 }
        );
        assert_eq!(
            "kadd:n=10,k=3,seed=4".parse::<GameSpec>().unwrap(),
            GameSpec::KAdditive {
                n: 10,
                k: 3,
                seed: 4
            }
        );
        assert_eq!(
            "totalcorr".parse::<GameSpec>().unwrap(),
            GameSpec::TotalCorrelation
        );
    }

    #[test]
    fn display_roundtrips() {
        for s in [
            "unanimity:n=8,S=1,2,3",
            "glove:n=6,left=1,2",
            "additive:c=1,-2,0.5",
            "random:n=4,seed=9",
            "kadd:n=6,k=2,seed=1",
        ] {
            let spec: GameSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        for s in [
            "",
            "unanimity:n=3",
            "unanimity:S=1",
            "glove:n=x,left=1",
            "poker:n=3",
            "random:n=3,m=2",
            "additive:",
            "random:n=3,n=4",
            "kadd:n=4,k=1,2",
        ] {
            assert!(s.parse::<GameSpec>().is_err(), "{s}");
        }
        assert!("unanimity:n=3,S=4"
            .parse::<GameSpec>()
            .unwrap()
            .build(24)
            .is_err());
        assert!("glove:n=3,left=1,2,3"
            .parse::<GameSpec>()
            .unwrap()
            .build(24)
            .is_err());
        assert!("random:n=30"
            .parse::<GameSpec>()
            .unwrap()
            .build(24)
            .is_err());
    }

    #[test]
    fn built_games_match_closed_forms() {
        let g = "glove:n=3,left=1,2"
            .parse::<GameSpec>()
            .unwrap()
            .build(24)
            .unwrap();
        let phi = exact_shapley(&g).unwrap();
        for (a, b) in phi.iter().zip([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

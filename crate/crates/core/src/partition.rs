use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Disjoint, covering groups of 0-based party indices.
///
/// Displayed and parsed with 1-based labels, groups separated by `|`:
/// `"12|34"` for single-digit labels or `"1,2|3,4"` in general.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct KPartition {
    groups: Vec<Vec<usize>>,
    parties: usize,
}

impl KPartition {
    pub fn new(groups: Vec<Vec<usize>>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidPartition("no groups".into()));
        }
        if groups.iter().any(Vec::is_empty) {
            return Err(Error::InvalidPartition("empty group".into()));
        }
        let parties: usize = groups.iter().map(Vec::len).sum();
        let mut seen = vec![false; parties];
        for &p in groups.iter().flatten() {
            if p >= parties {
                return Err(Error::InvalidPartition(format!(
                    "party {} outside 1..={parties}",
                    p + 1
                )));
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidPartition(format!("party {} repeated", p + 1)));
            }
        }
        Ok(Self { groups, parties })
    }

    /// Contiguous groups of the given sizes: `[2, 1, 2]` → `12|3|45`.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let mut start = 0;
        let groups = sizes
            .iter()
            .map(|&s| {
                let g: Vec<usize> = (start..start + s).collect();
                start += s;
                g
            })
            .collect();
        Self::new(groups)
    }

    /// `first L parties | rest`.
    pub fn cut(n: usize, l: usize) -> Result<Self> {
        if l == 0 || l >= n {
            return Err(Error::InvalidPartition(format!("cannot cut {n} parties after {l}")));
        }
        Self::contiguous(&[l, n - l])
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    /// Group sizes if every group is a contiguous ascending run in order.
    pub fn contiguous_sizes(&self) -> Option<Vec<usize>> {
        let mut next = 0;
        for g in &self.groups {
            for &p in g {
                if p != next {
                    return None;
                }
                next += 1;
            }
        }
        Some(self.groups.iter().map(Vec::len).collect())
    }
}

impl fmt::Display for KPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let compact = self.parties < 10;
        let groups: Vec<String> = self
            .groups
            .iter()
            .map(|g| {
                let labels: Vec<String> = g.iter().map(|p| (p + 1).to_string()).collect();
                labels.join(if compact { "" } else { "," })
            })
            .collect();
        f.write_str(&groups.join("|"))
    }
}

impl FromStr for KPartition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_label = |t: &str| -> Result<usize> {
            let v: usize = t
                .trim()
                .parse()
                .map_err(|_| Error::InvalidPartition(format!("bad party label {t:?}")))?;
            v.checked_sub(1)
                .ok_or(Error::InvalidPartition("party labels start at 1".into()))
        };
        let groups = s
            .split('|')
            .map(|g| {
                let g = g.trim();
                if g.contains(',') {
                    g.split(',').map(parse_label).collect::<Result<Vec<_>>>()
                } else {
                    g.chars()
                        .map(|c| parse_label(&c.to_string()))
                        .collect::<Result<Vec<_>>>()
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(groups)
    }
}

impl Serialize for KPartition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for KPartition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let p: KPartition = "12|34".parse().unwrap();
        assert_eq!(p.groups(), &[vec![0, 1], vec![2, 3]]);
        assert_eq!(p.to_string(), "12|34");
        let q: KPartition = "1,3|2".parse().unwrap();
        assert_eq!(q.groups(), &[vec![0, 2], vec![1]]);
        assert_eq!(q.contiguous_sizes(), None);
        assert_eq!(p.contiguous_sizes(), Some(vec![2, 2]));
        let wide = KPartition::contiguous(&[5, 6]).unwrap();
        assert_eq!(wide.to_string(), "1,2,3,4,5|6,7,8,9,10,11");
        assert_eq!(wide.to_string().parse::<KPartition>().unwrap(), wide);
    }

    #[test]
    fn rejects_invalid() {
        assert!("12|23".parse::<KPartition>().is_err());
        assert!("12|4".parse::<KPartition>().is_err());
        assert!("0|1".parse::<KPartition>().is_err());
        assert!("12||3".parse::<KPartition>().is_err());
        assert!(KPartition::cut(3, 3).is_err());
    }
}

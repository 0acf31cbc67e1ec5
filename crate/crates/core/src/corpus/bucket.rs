use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Shortest admissible sentence, in words.
pub const MIN_WORDS: usize = 10;
/// Longer sentences are truncated to this many words.
pub const MAX_WORDS: usize = 200;

/// An inclusive word-count range such as `10-14`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bucket {
    pub lo: usize,
    pub hi: usize,
}

impl Bucket {
    pub const fn new(lo: usize, hi: usize) -> Self {
        Bucket { lo, hi }
    }

    pub fn contains(&self, word_count: usize) -> bool {
        self.lo <= word_count && word_count <= self.hi
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

impl FromStr for Bucket {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (lo, hi) = s
            .split_once('-')
            .ok_or_else(|| Error::Data(format!("bucket {s:?} is not of the form lo-hi")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::Data(format!("bucket {s:?} has a non-integer bound")))
        };
        let (lo, hi) = (parse(lo)?, parse(hi)?);
        if lo > hi {
            return Err(Error::Data(format!("bucket {s:?} has lo > hi")));
        }
        Ok(Bucket { lo, hi })
    }
}

impl Serialize for Bucket {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bucket {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The length ranges reported by default. `110-119` and `180-200` differ from
/// the commonly cited ranges (`109-119`, `180-199`): the former overlapped
/// `100-109` and the latter left 200-word sentences without a bucket.
pub const DEFAULT_RANGES: [(usize, usize); 19] = [
    (10, 14),
    (15, 19),
    (20, 24),
    (25, 29),
    (30, 34),
    (35, 39),
    (40, 49),
    (50, 59),
    (60, 69),
    (70, 79),
    (80, 89),
    (90, 99),
    (100, 109),
    (110, 119),
    (120, 129),
    (130, 139),
    (140, 159),
    (160, 179),
    (180, 200),
];

/// Provenance note describing how the default ranges depart from the
/// commonly cited ones.
pub const DEFAULT_SPEC_REPAIRS: &str =
    "109-119 read as 110-119 (overlapped 100-109); 180-199 extended to 180-200 (200-word truncations)";

/// Ordered, gap-free, non-overlapping word-count ranges covering
/// `MIN_WORDS..=MAX_WORDS`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BucketSpec {
    ranges: Vec<Bucket>,
}

impl Default for BucketSpec {
    fn default() -> Self {
        BucketSpec {
            ranges: DEFAULT_RANGES
                .iter()
                .map(|&(lo, hi)| Bucket::new(lo, hi))
                .collect(),
        }
    }
}

impl BucketSpec {
    pub fn new(ranges: Vec<Bucket>) -> Result<Self> {
        let first = ranges
            .first()
            .ok_or_else(|| Error::Config("bucket spec has no ranges".into()))?;
        if first.lo != MIN_WORDS {
            return Err(Error::Config(format!(
                "bucket spec must start at {MIN_WORDS}, starts at {}",
                first.lo
            )));
        }
        for pair in ranges.windows(2) {
            if pair[1].lo != pair[0].hi + 1 {
                return Err(Error::Config(format!(
                    "bucket {} does not directly follow {}",
                    pair[1], pair[0]
                )));
            }
        }
        let last = ranges[ranges.len() - 1];
        if last.hi < MAX_WORDS {
            return Err(Error::Config(format!(
                "bucket spec must reach {MAX_WORDS}, ends at {}",
                last.hi
            )));
        }
        Ok(BucketSpec { ranges })
    }

    /// Parses one `lo-hi` range per line. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut ranges = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bucket = line
                .parse::<Bucket>()
                .map_err(|e| Error::Config(format!("bucket spec line {}: {e}", n + 1)))?;
            ranges.push(bucket);
        }
        Self::new(ranges)
    }

    pub fn to_text(&self) -> String {
        self.ranges.iter().map(|b| format!("{b}\n")).collect()
    }

    pub fn ranges(&self) -> &[Bucket] {
        &self.ranges
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// The bucket containing `word_count`, if any.
    pub fn assign(&self, word_count: usize) -> Option<Bucket> {
        let idx = self.ranges.partition_point(|b| b.hi < word_count);
        self.ranges.get(idx).copied().filter(|b| b.contains(word_count))
    }

    /// Position of `bucket` in spec order.
    pub fn position(&self, bucket: Bucket) -> Option<usize> {
        self.ranges.binary_search(&bucket).ok()
    }

    pub fn is_default(&self) -> bool {
        *self == BucketSpec::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_assignments() {
        let spec = BucketSpec::default();
        assert_eq!(spec.len(), 19);
        assert_eq!(spec.assign(12).unwrap().to_string(), "10-14");
        assert_eq!(spec.assign(9), None);
        assert_eq!(spec.assign(155).unwrap().to_string(), "140-159");
        assert_eq!(spec.assign(200).unwrap().to_string(), "180-200");
        assert_eq!(spec.assign(201), None);
        assert_eq!(spec.assign(0), None);
    }

    #[test]
    fn every_admissible_count_has_exactly_one_bucket() {
        let spec = BucketSpec::default();
        for wc in MIN_WORDS..=MAX_WORDS {
            let hits = spec.ranges().iter().filter(|b| b.contains(wc)).count();
            assert_eq!(hits, 1, "word count {wc}");
            assert!(spec.assign(wc).unwrap().contains(wc));
        }
    }

    #[test]
    fn rejects_gaps_overlaps_and_short_coverage() {
        let mk = |v: &[(usize, usize)]| {
            BucketSpec::new(v.iter().map(|&(a, b)| Bucket::new(a, b)).collect())
        };
        assert!(mk(&[(10, 100), (102, 200)]).is_err());
        assert!(mk(&[(10, 100), (100, 200)]).is_err());
        assert!(mk(&[(10, 150)]).is_err());
        assert!(mk(&[(11, 200)]).is_err());
        assert!(mk(&[]).is_err());
        assert!(mk(&[(10, 250)]).is_ok());
    }

    #[test]
    fn text_round_trip() {
        let spec = BucketSpec::default();
        let text = spec.to_text();
        assert!(text.starts_with("10-14\n15-19\n"));
        assert_eq!(BucketSpec::parse(&text).unwrap(), spec);
        assert!(BucketSpec::parse("10-20\nfoo\n").is_err());
    }
}

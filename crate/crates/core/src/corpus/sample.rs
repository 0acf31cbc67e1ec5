use std::collections::{BTreeMap, HashSet};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Corpus, Label, SplitSet, TextRecord};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Keeps at most `target_per_bucket` records per bucket, chosen by a seeded
/// uniform draw without replacement. Surviving records keep their order.
///
/// Candidates are sorted by id before sampling, so the result does not depend
/// on input order. Normalization precedes pairing, so machine records are
/// rejected.
pub fn normalize_corpus(corpus: &Corpus, target_per_bucket: usize, seed: u64) -> Result<Corpus> {
    if target_per_bucket == 0 {
        return Err(Error::Config("target per bucket must be positive".into()));
    }
    if let Some(r) = corpus.records().iter().find(|r| r.label == Label::Machine) {
        return Err(Error::Config(format!(
            "normalize runs before pairing; found machine record {:?}",
            r.id
        )));
    }
    let spec = corpus.bucket_spec();
    let mut per_bucket: Vec<Vec<&str>> = vec![Vec::new(); spec.len()];
    for r in corpus.records() {
        let pos = r
            .bucket
            .and_then(|b| spec.position(b))
            .ok_or_else(|| Error::Data(format!("record {:?} has no bucket", r.id)))?;
        per_bucket[pos].push(&r.id);
    }

    let mut keep: HashSet<&str> = HashSet::with_capacity(corpus.len());
    for (pos, ids) in per_bucket.iter_mut().enumerate() {
        if ids.len() <= target_per_bucket {
            keep.extend(ids.iter().copied());
            continue;
        }
        ids.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, pos as u64));
        keep.extend(
            index::sample(&mut rng, ids.len(), target_per_bucket)
                .into_iter()
                .map(|i| ids[i]),
        );
    }

    let records = corpus
        .records()
        .iter()
        .filter(|r| keep.contains(r.id.as_str()))
        .cloned()
        .collect();
    let mut provenance = corpus.provenance.clone();
    provenance.insert("normalize_seed".into(), seed.to_string());
    provenance.insert("normalize_target_per_bucket".into(), target_per_bucket.to_string());
    Corpus::new(records, spec.clone(), provenance)
}

/// Train/test/val fractions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub test: f64,
    pub val: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            test: 0.1,
            val: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, test: f64, val: f64) -> Result<Self> {
        for (name, r) in [("train", train), ("test", test), ("val", val)] {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Config(format!("{name} ratio {r} is outside (0, 1)")));
            }
        }
        let sum = train + test + val;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split ratios sum to {sum}, not 1")));
        }
        Ok(SplitRatios { train, test, val })
    }

    /// Apportions `n` items with the largest-remainder method, so each part is
    /// within one item of its exact share.
    pub fn apportion(&self, n: usize) -> [usize; 3] {
        let shares = [self.train, self.test, self.val].map(|r| r * n as f64);
        let mut counts = shares.map(|s| s.floor() as usize);
        let assigned: usize = counts.iter().sum();
        let mut order = [0usize, 1, 2];
        // Stable sort keeps train before test before val on equal remainders.
        order.sort_by(|&a, &b| {
            let ra = shares[a] - shares[a].floor();
            let rb = shares[b] - shares[b].floor();
            rb.total_cmp(&ra)
        });
        for &i in order.iter().take(n.saturating_sub(assigned)) {
            counts[i] += 1;
        }
        counts
    }
}

impl std::str::FromStr for SplitRatios {
    type Err = Error;

    /// Parses `train,test,val`, e.g. `0.8,0.1,0.1`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("invalid split ratio {p:?}")))
            })
            .collect::<Result<_>>()?;
        match parts[..] {
            [a, b, c] => SplitRatios::new(a, b, c),
            _ => Err(Error::Config(format!("expected three split ratios, got {s:?}"))),
        }
    }
}

/// Splits at pair-group granularity, stratified by bucket.
///
/// A group is every record sharing a [`TextRecord::group_key`]. Its stratum is
/// the bucket of the human record whose id is the key (or, failing that, the
/// bucket of its first record). Within each stratum, groups are sorted by key,
/// shuffled with a per-bucket seeded RNG, and apportioned by
/// [`SplitRatios::apportion`].
pub fn split_corpus(corpus: &Corpus, ratios: SplitRatios, seed: u64) -> Result<SplitSet> {
    SplitRatios::new(ratios.train, ratios.test, ratios.val)?;
    let spec = corpus.bucket_spec();

    let mut groups: BTreeMap<&str, Vec<&TextRecord>> = BTreeMap::new();
    for r in corpus.records() {
        groups.entry(r.group_key()).or_default().push(r);
    }

    let mut strata: Vec<Vec<&str>> = vec![Vec::new(); spec.len()];
    for (key, members) in &groups {
        let anchor = members
            .iter()
            .find(|r| r.id == *key && r.label == Label::Human)
            .unwrap_or(&members[0]);
        let pos = anchor
            .bucket
            .and_then(|b| spec.position(b))
            .ok_or_else(|| Error::Data(format!("record {:?} has no bucket", anchor.id)))?;
        strata[pos].push(key);
    }

    // 0 = train, 1 = test, 2 = val
    let mut assignment: BTreeMap<&str, usize> = BTreeMap::new();
    for (pos, keys) in strata.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, pos as u64));
        keys.shuffle(&mut rng);
        let [n_train, n_test, _] = ratios.apportion(keys.len());
        for (i, key) in keys.iter().enumerate() {
            let part = if i < n_train {
                0
            } else if i < n_train + n_test {
                1
            } else {
                2
            };
            assignment.insert(key, part);
        }
    }

    let mut parts: [Vec<TextRecord>; 3] = Default::default();
    for r in corpus.records() {
        parts[assignment[r.group_key()]].push(r.clone());
    }
    let [train, test, val] = parts;
    let make = |records: Vec<TextRecord>, name: &str| {
        let mut provenance = corpus.provenance.clone();
        provenance.insert("split".into(), name.into());
        provenance.insert("split_seed".into(), seed.to_string());
        provenance.insert(
            "split_ratios".into(),
            format!("{},{},{}", ratios.train, ratios.test, ratios.val),
        );
        Corpus::new(records, spec.clone(), provenance)
    };
    Ok(SplitSet {
        train: make(train, "train")?,
        test: make(test, "test")?,
        val: make(val, "val")?,
    })
}

/// Keeps whole pair groups, in seeded random order, until adding the next
/// group would exceed `max_records`. Returns the corpus unchanged when it
/// already fits. Meant for capping superlinear training cost.
pub fn subsample_groups(corpus: &Corpus, max_records: usize, seed: u64) -> Result<Corpus> {
    if max_records == 0 {
        return Err(Error::Config("subsample size must be positive".into()));
    }
    if corpus.len() <= max_records {
        return Ok(corpus.clone());
    }
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for r in corpus.records() {
        *sizes.entry(r.group_key()).or_default() += 1;
    }
    let mut keys: Vec<&str> = sizes.keys().copied().collect();
    keys.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut keep = HashSet::new();
    let mut total = 0;
    for key in keys {
        if total + sizes[key] > max_records {
            continue;
        }
        total += sizes[key];
        keep.insert(key);
    }
    let records = corpus
        .records()
        .iter()
        .filter(|r| keep.contains(r.group_key()))
        .cloned()
        .collect();
    let mut provenance = corpus.provenance.clone();
    provenance.insert("subsample_seed".into(), seed.to_string());
    provenance.insert("subsample_max_records".into(), max_records.to_string());
    Corpus::new(records, corpus.bucket_spec().clone(), provenance)
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use proptest::prelude::*;

    use super::*;
    use crate::corpus::tests::record;
    use crate::corpus::{Bucket, BucketSpec};

    fn corpus(records: Vec<TextRecord>) -> Corpus {
        Corpus::new(records, BucketSpec::default(), BTreeMap::new()).unwrap()
    }

    fn bucket_sizes(c: &Corpus) -> HashMap<Bucket, usize> {
        c.bucket_counts().into_iter().filter(|(_, n)| *n > 0).collect()
    }

    #[test]
    fn subsample_keeps_whole_groups() {
        let mut recs = Vec::new();
        for i in 0..50 {
            let h = format!("h{i:02}");
            recs.push(record(&h, 12 + i % 30, Label::Human, Some(&h)));
            recs.push(record(&format!("{h}-m"), 12, Label::Machine, Some(&h)));
        }
        let c = corpus(recs);
        let sub = subsample_groups(&c, 31, 5).unwrap();
        assert_eq!(sub.len(), 30);
        for r in sub.records() {
            assert_eq!(sub.records().iter().filter(|o| o.group_key() == r.group_key()).count(), 2);
        }
        assert_eq!(sub, subsample_groups(&c, 31, 5).unwrap());
        assert_eq!(subsample_groups(&c, 500, 5).unwrap(), c);
        assert!(subsample_groups(&c, 0, 5).is_err());
    }

    #[test]
    fn normalize_caps_each_bucket() {
        let mut recs = Vec::new();
        for (words, n) in [(12, 100), (17, 50), (22, 80)] {
            for i in 0..n {
                recs.push(record(&format!("b{words}-{i:03}"), words, Label::Human, None));
            }
        }
        let c = corpus(recs);
        let out = normalize_corpus(&c, 50, 7).unwrap();
        let sizes = bucket_sizes(&out);
        assert_eq!(sizes[&Bucket::new(10, 14)], 50);
        assert_eq!(sizes[&Bucket::new(15, 19)], 50);
        assert_eq!(sizes[&Bucket::new(20, 24)], 50);
        assert_eq!(out.provenance["normalize_seed"], "7");

        let again = normalize_corpus(&c, 50, 7).unwrap();
        assert_eq!(again.records(), out.records());
        let other = normalize_corpus(&c, 50, 8).unwrap();
        assert_ne!(other.records(), out.records());

        let unchanged = normalize_corpus(&c, 1000, 7).unwrap();
        assert_eq!(unchanged.records(), c.records());
    }

    #[test]
    fn normalize_rejects_paired_corpora() {
        let c = corpus(vec![
            record("h", 12, Label::Human, Some("h")),
            record("h-m", 12, Label::Machine, Some("h")),
        ]);
        assert!(matches!(normalize_corpus(&c, 1, 0), Err(Error::Config(_))));
        assert!(normalize_corpus(&c, 0, 0).is_err());
    }

    #[test]
    fn normalize_ignores_input_order() {
        let recs: Vec<_> = (0..40).map(|i| record(&format!("r{i:02}"), 12, Label::Human, None)).collect();
        let mut rev = recs.clone();
        rev.reverse();
        let a = normalize_corpus(&corpus(recs), 10, 3).unwrap();
        let b = normalize_corpus(&corpus(rev), 10, 3).unwrap();
        let ids = |c: &Corpus| {
            let mut v: Vec<_> = c.records().iter().map(|r| r.id.clone()).collect();
            v.sort();
            v
        };
        assert_eq!(ids(&a), ids(&b));
    }

    #[test]
    fn ratio_validation() {
        assert!(SplitRatios::new(0.8, 0.1, 0.1).is_ok());
        assert!(SplitRatios::new(0.8, 0.2, 0.0).is_err());
        assert!(SplitRatios::new(0.8, 0.1, 0.2).is_err());
        assert!(SplitRatios::new(1.2, -0.1, -0.1).is_err());
        assert!("0.8,0.1".parse::<SplitRatios>().is_err());
        assert_eq!("0.7, 0.2, 0.1".parse::<SplitRatios>().unwrap().test, 0.2);
    }

    #[test]
    fn apportion_sums() {
        let r = SplitRatios::default();
        assert_eq!(r.apportion(100), [80, 10, 10]);
        assert_eq!(r.apportion(0), [0, 0, 0]);
        for n in 0..200 {
            let c = r.apportion(n);
            assert_eq!(c.iter().sum::<usize>(), n);
        }
    }

    #[test]
    fn unpaired_single_bucket_sizes() {
        let c = corpus((0..100).map(|i| record(&format!("r{i:03}"), 30, Label::Human, None)).collect());
        let s = split_corpus(&c, SplitRatios::default(), 1).unwrap();
        assert_eq!((s.train.len(), s.test.len(), s.val.len()), (80, 10, 10));
    }

    #[test]
    fn pairs_stay_together() {
        let mut recs = Vec::new();
        for i in 0..10 {
            let h = format!("p{i}");
            recs.push(record(&h, 20, Label::Human, Some(&h)));
            recs.push(record(&format!("{h}-m"), 20 + i, Label::Machine, Some(&h)));
        }
        let s = split_corpus(&corpus(recs), SplitRatios::default(), 11).unwrap();
        for (_, part) in s.parts() {
            for r in part.records() {
                assert_eq!(
                    part.records().iter().filter(|o| o.group_key() == r.group_key()).count(),
                    2
                );
            }
        }
        assert_eq!(s.train.len() + s.test.len() + s.val.len(), 20);
    }

    #[test]
    fn bad_ratios_are_config_errors() {
        let c = corpus(vec![record("a", 12, Label::Human, None)]);
        let bad = SplitRatios {
            train: 0.5,
            test: 0.5,
            val: 0.5,
        };
        assert!(matches!(split_corpus(&c, bad, 0), Err(Error::Config(_))));
    }

    fn arb_corpus() -> impl Strategy<Value = Corpus> {
        prop::collection::vec((10usize..=200, any::<bool>(), 10usize..=200), 1..120).prop_map(|groups| {
            let mut recs = Vec::new();
            for (i, (hw, paired, mw)) in groups.into_iter().enumerate() {
                let h = format!("g{i:04}");
                if paired {
                    recs.push(record(&h, hw, Label::Human, Some(&h)));
                    recs.push(record(&format!("{h}-m"), mw, Label::Machine, Some(&h)));
                } else {
                    recs.push(record(&h, hw, Label::Human, None));
                }
            }
            Corpus::new(recs, BucketSpec::default(), BTreeMap::new()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn split_partitions_and_colocates(c in arb_corpus(), seed in any::<u64>()) {
            let s = split_corpus(&c, SplitRatios::default(), seed).unwrap();
            let mut seen: HashMap<&str, usize> = HashMap::new();
            let mut group_part: HashMap<&str, usize> = HashMap::new();
            for (p, (_, part)) in s.parts().iter().enumerate() {
                for r in part.records() {
                    prop_assert!(seen.insert(&r.id, p).is_none());
                    let prev = group_part.insert(r.group_key(), p);
                    prop_assert!(prev.is_none() || prev == Some(p));
                }
            }
            prop_assert_eq!(seen.len(), c.len());
            for r in c.records() {
                prop_assert!(seen.contains_key(r.id.as_str()));
            }
            let rerun = split_corpus(&c, SplitRatios::default(), seed).unwrap();
            prop_assert_eq!(rerun, s);
        }

        #[test]
        fn split_per_bucket_within_one_group(c in arb_corpus(), seed in any::<u64>()) {
            let ratios = SplitRatios::default();
            let s = split_corpus(&c, ratios, seed).unwrap();
            let spec = c.bucket_spec();
            // recount groups per stratum (human anchor bucket) in each part
            let count = |corp: &Corpus| {
                let mut v = vec![0usize; spec.len()];
                for r in corp.records() {
                    if r.id == r.group_key() {
                        v[spec.position(r.bucket.unwrap()).unwrap()] += 1;
                    }
                }
                v
            };
            let total = count(&c);
            let parts = [count(&s.train), count(&s.test), count(&s.val)];
            for b in 0..spec.len() {
                let n = total[b] as f64;
                for (p, r) in [ratios.train, ratios.test, ratios.val].iter().enumerate() {
                    prop_assert!((parts[p][b] as f64 - r * n).abs() <= 1.0);
                }
            }
        }

        #[test]
        fn normalize_never_grows_buckets(c in arb_corpus(), target in 1usize..10, seed in any::<u64>()) {
            let humans: Vec<_> = c.records().iter().filter(|r| r.label == Label::Human).cloned().collect();
            let c = Corpus::new(humans, BucketSpec::default(), BTreeMap::new()).unwrap();
            let out = normalize_corpus(&c, target, seed).unwrap();
            let before = c.bucket_counts();
            for ((b, n_out), (_, n_in)) in out.bucket_counts().into_iter().zip(before) {
                prop_assert!(n_out <= n_in, "bucket {}", b);
                prop_assert_eq!(n_out, n_in.min(target));
            }
            let originals: HashMap<_, _> = c.records().iter().map(|r| (r.id.clone(), r)).collect();
            for r in out.records() {
                prop_assert_eq!(r, originals[&r.id]);
            }
        }
    }
}

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LIKERT_MIN: u8 = 1;
pub const LIKERT_MAX: u8 = 7;

/// Raw Likert ratings keyed by (participant, sentence).
///
/// Not every participant needs to rate every sentence. Participants whose
/// ratings cannot be standardized are accepted here and rejected by
/// [`z_normalize`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RatingTable {
    entries: BTreeMap<(String, String), u8>,
}

impl RatingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        participant: impl Into<String>,
        sentence: impl Into<String>,
        rating: i64,
    ) -> Result<()> {
        if !(LIKERT_MIN as i64..=LIKERT_MAX as i64).contains(&rating) {
            return Err(Error::RatingOutOfRange { rating });
        }
        let key = (participant.into(), sentence.into());
        if self.entries.contains_key(&key) {
            return Err(Error::DuplicateRating {
                participant: key.0,
                sentence: key.1,
            });
        }
        self.entries.insert(key, rating as u8);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, participant: &str, sentence: &str) -> Option<u8> {
        self.entries
            .get(&(participant.to_owned(), sentence.to_owned()))
            .copied()
    }

    /// Entries in (participant, sentence) order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u8)> {
        self.entries
            .iter()
            .map(|((p, s), &r)| (p.as_str(), s.as_str(), r))
    }

    pub fn by_participant(&self) -> BTreeMap<&str, Vec<(&str, u8)>> {
        let mut out: BTreeMap<&str, Vec<(&str, u8)>> = BTreeMap::new();
        for (p, s, r) in self.iter() {
            out.entry(p).or_default().push((s, r));
        }
        out
    }

    pub fn participant_count(&self) -> usize {
        self.by_participant().len()
    }

    pub fn sentence_count(&self) -> usize {
        let mut ids: Vec<&str> = self.iter().map(|(_, s, _)| s).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    /// Participants that cannot be z-normalized: fewer than two ratings or
    /// all ratings identical.
    pub fn unnormalizable_participants(&self) -> Vec<String> {
        self.by_participant()
            .into_iter()
            .filter(|(_, rs)| rs.len() < 2 || rs.iter().all(|&(_, r)| r == rs[0].1))
            .map(|(p, _)| p.to_owned())
            .collect()
    }
}

#[derive(Debug, Deserialize)]
struct RatingRow {
    participant_id: String,
    sentence_id: String,
    rating: i64,
}

/// Reads a `participant_id,sentence_id,rating` CSV.
pub fn parse_ratings(path: impl AsRef<Path>) -> Result<RatingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e))?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::Empty(format!("{} has no header", path.display())));
    }
    let expected = ["participant_id", "sentence_id", "rating"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::parse(
            path,
            1,
            format!("expected header {:?}, found {:?}", expected.join(","), headers),
        ));
    }
    let mut table = RatingTable::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(path, line, e)
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row: RatingRow = record
            .deserialize(Some(&headers))
            .map_err(|e| Error::parse(path, line, e))?;
        table
            .insert(row.participant_id, row.sentence_id, row.rating)
            .map_err(|e| Error::at_line(path, line, e))?;
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdConvention {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1.
    Sample,
}

pub type NormalizedRatings = BTreeMap<(String, String), f64>;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standardizes each participant's ratings to mean 0 and standard deviation 1.
pub fn z_normalize(ratings: &RatingTable, sd: SdConvention) -> Result<NormalizedRatings> {
    if ratings.is_empty() {
        return Err(Error::Empty("rating table".into()));
    }
    let mut out = BTreeMap::new();
    for (participant, rows) in ratings.by_participant() {
        if rows.len() < 2 {
            return Err(Error::TooFewRatings {
                participant: participant.to_owned(),
                count: rows.len(),
            });
        }
        let xs: Vec<f64> = rows.iter().map(|&(_, r)| f64::from(r)).collect();
        let m = mean(&xs);
        let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
        let denom = match sd {
            SdConvention::Population => xs.len() as f64,
            SdConvention::Sample => (xs.len() - 1) as f64,
        };
        let s = (ss / denom).sqrt();
        if s == 0.0 {
            return Err(Error::ZeroVariance(participant.to_owned()));
        }
        for (&(sentence, _), x) in rows.iter().zip(&xs) {
            out.insert((participant.to_owned(), sentence.to_owned()), (x - m) / s);
        }
    }
    Ok(out)
}

/// Per-sentence gold acceptability: mean z-score over available raters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JudgmentVector {
    pub values: BTreeMap<String, f64>,
    pub participant_counts: BTreeMap<String, usize>,
}

impl JudgmentVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, sentence_id: &str) -> Option<f64> {
        self.values.get(sentence_id).copied()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file, path)
    }

    /// `sentence_id,mean_z,participant_count`; `label` names the sink in errors.
    pub fn write_csv_to<W: std::io::Write>(&self, out: W, label: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sentence_id", "mean_z", "participant_count"])
            .map_err(|e| csv_io(label, e))?;
        for (id, v) in &self.values {
            let count = self.participant_counts.get(id).copied().unwrap_or(0);
            w.write_record([id.as_str(), &v.to_string(), &count.to_string()])
                .map_err(|e| csv_io(label, e))?;
        }
        w.flush().map_err(|e| Error::io(label, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            sentence_id: String,
            mean_z: f64,
            participant_count: usize,
        }
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let mut out = JudgmentVector::default();
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| Error::parse(path, line, e))?;
            if !row.mean_z.is_finite() {
                return Err(Error::parse(path, line, "mean_z must be finite"));
            }
            if row.participant_count == 0 {
                return Err(Error::parse(path, line, "participant_count must be positive"));
            }
            if out.values.insert(row.sentence_id.clone(), row.mean_z).is_some() {
                return Err(Error::at_line(
                    path,
                    line,
                    Error::DuplicateSentence(row.sentence_id),
                ));
            }
            out.participant_counts
                .insert(row.sentence_id, row.participant_count);
        }
        if out.is_empty() {
            return Err(Error::Empty(format!("{} has no judgments", path.display())));
        }
        Ok(out)
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

/// Averages normalized ratings per sentence.
///
/// Each sentence's values are summed in sorted order, so the result does not
/// depend on participant labels or ordering.
pub fn aggregate_judgments(normalized: &NormalizedRatings) -> Result<JudgmentVector> {
    if normalized.is_empty() {
        return Err(Error::Empty("normalized ratings".into()));
    }
    let mut per_sentence: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for ((_, s), &z) in normalized {
        per_sentence.entry(s.as_str()).or_default().push(z);
    }
    let mut out = JudgmentVector::default();
    for (s, mut zs) in per_sentence {
        zs.sort_by(f64::total_cmp);
        out.values.insert(s.to_owned(), mean(&zs));
        out.participant_counts.insert(s.to_owned(), zs.len());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::io::Write;

    fn csv_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_valid_rows() {
        let f = csv_file("participant_id,sentence_id,rating\np1,s1,7\np1,s2,1\n");
        let t = parse_ratings(f.path()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("p1", "s1"), Some(7));
    }

    #[test]
    fn out_of_range_rating() {
        let f = csv_file("participant_id,sentence_id,rating\np1,s1,9\n");
        let err = parse_ratings(f.path()).unwrap_err();
        assert_eq!(err.code(), "rating_range");
        assert!(matches!(err, Error::AtLine { line: 2, .. }));
    }

    #[test]
    fn duplicate_rating() {
        let f = csv_file("participant_id,sentence_id,rating\np1,s1,3\np1,s2,4\np1,s1,5\n");
        let err = parse_ratings(f.path()).unwrap_err();
        assert_eq!(err.code(), "duplicate_rating");
        assert!(matches!(err, Error::AtLine { line: 4, .. }));
    }

    #[test]
    fn bad_header_and_empty_file() {
        let f = csv_file("who,what,score\np1,s1,3\n");
        assert_eq!(parse_ratings(f.path()).unwrap_err().code(), "parse");
        let f = csv_file("");
        assert_eq!(parse_ratings(f.path()).unwrap_err().code(), "empty_input");
    }

    #[test]
    fn constant_participant_is_flagged_not_rejected() {
        let f = csv_file("participant_id,sentence_id,rating\np1,s1,5\np1,s2,5\np2,s1,1\np2,s2,2\n");
        let t = parse_ratings(f.path()).unwrap();
        assert_eq!(t.unnormalizable_participants(), vec!["p1".to_string()]);
        assert!(matches!(
            z_normalize(&t, SdConvention::Population),
            Err(Error::ZeroVariance(p)) if p == "p1"
        ));
    }

    fn table(rows: &[(&str, &str, i64)]) -> RatingTable {
        let mut t = RatingTable::new();
        for &(p, s, r) in rows {
            t.insert(p, s, r).unwrap();
        }
        t
    }

    #[test]
    fn two_point_case() {
        let z = z_normalize(&table(&[("p", "a", 1), ("p", "b", 7)]), SdConvention::Population)
            .unwrap();
        assert_eq!(z[&("p".into(), "a".into())], -1.0);
        assert_eq!(z[&("p".into(), "b".into())], 1.0);
    }

    #[test]
    fn three_point_case() {
        let z = z_normalize(
            &table(&[("p", "a", 2), ("p", "b", 4), ("p", "c", 6)]),
            SdConvention::Population,
        )
        .unwrap();
        // mean 4, population sd sqrt(8/3)
        let expected = 2.0 / (8.0f64 / 3.0).sqrt();
        assert_abs_diff_eq!(z[&("p".into(), "a".into())], -expected, epsilon = 1e-12);
        assert_abs_diff_eq!(z[&("p".into(), "b".into())], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z[&("p".into(), "c".into())], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 1.2247, epsilon = 1e-4);
    }

    #[test]
    fn sample_sd_convention() {
        let z = z_normalize(&table(&[("p", "a", 1), ("p", "b", 7)]), SdConvention::Sample)
            .unwrap();
        assert_abs_diff_eq!(z[&("p".into(), "b".into())], 1.0 / 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn zero_variance_and_singleton() {
        let t = table(&[("p", "a", 5), ("p", "b", 5), ("p", "c", 5)]);
        assert!(matches!(
            z_normalize(&t, SdConvention::Population),
            Err(Error::ZeroVariance(p)) if p == "p"
        ));
        let t = table(&[("q", "a", 5)]);
        assert_eq!(
            z_normalize(&t, SdConvention::Population).unwrap_err().code(),
            "too_few_ratings"
        );
    }

    fn norm(rows: &[(&str, &str, f64)]) -> NormalizedRatings {
        rows.iter()
            .map(|&(p, s, z)| ((p.to_owned(), s.to_owned()), z))
            .collect()
    }

    #[test]
    fn aggregation_means() {
        let j = aggregate_judgments(&norm(&[
            ("p1", "sym", 1.0),
            ("p2", "sym", -1.0),
            ("p1", "one", 0.5),
            ("p1", "three", 0.3),
            ("p2", "three", 0.6),
            ("p3", "three", 0.9),
        ]))
        .unwrap();
        assert_eq!(j.get("sym"), Some(0.0));
        assert_eq!(j.get("one"), Some(0.5));
        assert_abs_diff_eq!(j.get("three").unwrap(), 0.6, epsilon = 1e-15);
        assert_eq!(j.participant_counts["three"], 3);
        assert!(aggregate_judgments(&BTreeMap::new()).is_err());
    }

    #[test]
    fn judgment_csv_round_trip() {
        let j = aggregate_judgments(&norm(&[("p1", "a", 0.1), ("p2", "a", -0.7), ("p1", "b", 1.3)]))
            .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        j.write_csv(f.path()).unwrap();
        assert_eq!(JudgmentVector::read_csv(f.path()).unwrap(), j);
    }

    fn arb_table() -> impl Strategy<Value = RatingTable> {
        proptest::collection::vec(proptest::collection::vec(1i64..=7, 2..40), 1..8)
            .prop_map(|participants| {
                let mut t = RatingTable::new();
                for (pi, rs) in participants.iter().enumerate() {
                    for (si, &r) in rs.iter().enumerate() {
                        t.insert(format!("p{pi}"), format!("s{si}"), r).unwrap();
                    }
                    // Guarantee nonzero variance.
                    let extra = if rs[0] == 7 { 1 } else { 7 };
                    t.insert(format!("p{pi}"), "s_extra", extra).unwrap();
                }
                t
            })
    }

    proptest! {
        #[test]
        fn z_scores_are_standardized(t in arb_table()) {
            let z = z_normalize(&t, SdConvention::Population).unwrap();
            let mut per: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            for ((p, _), v) in &z {
                per.entry(p.as_str()).or_default().push(*v);
            }
            for vs in per.values() {
                let m = vs.iter().sum::<f64>() / vs.len() as f64;
                let sd = (vs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / vs.len() as f64).sqrt();
                prop_assert!(m.abs() < 1e-10);
                prop_assert!((sd - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn aggregation_ignores_participant_labels(
            zs in proptest::collection::vec(-3.0f64..3.0, 1..30),
            seed in any::<u64>(),
        ) {
            let base: NormalizedRatings = zs
                .iter()
                .enumerate()
                .map(|(i, &z)| ((format!("p{i:03}"), "s".to_owned()), z))
                .collect();
            let perm = crate::rng::permutation(seed, zs.len());
            let relabeled: NormalizedRatings = zs
                .iter()
                .enumerate()
                .map(|(i, &z)| ((format!("p{:03}", perm[i]), "s".to_owned()), z))
                .collect();
            prop_assert_eq!(
                aggregate_judgments(&base).unwrap(),
                aggregate_judgments(&relabeled).unwrap()
            );
        }
    }
}

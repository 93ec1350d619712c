use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{ImplicitDataset, Interaction};
use crate::error::{Error, Result};

/// Loads the MovieLens-100k `u.data` layout: whitespace-separated
/// `user item rating timestamp` rows.
///
/// Raw ids are remapped to dense indices in order of first appearance. Every
/// rated pair becomes an observed positive. Truth for stored pairs follows
/// the default clean rule (rating 5); the truth of unrated pairs is unknown.
pub fn load_movielens_100k(path: &Path) -> Result<ImplicitDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_movielens(&text)
}

pub fn parse_movielens(text: &str) -> Result<ImplicitDataset> {
    let mut users: BTreeMap<u64, u32> = BTreeMap::new();
    let mut items: BTreeMap<u64, u32> = BTreeMap::new();
    let mut interactions = Vec::new();
    let mut seen = BTreeSet::new();

    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let num = |idx: usize, name: &str| -> Result<i64> {
            fields[idx].parse::<i64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("{name} '{}' is not an integer", fields[idx]),
            })
        };
        let (user, item, rating, ts) = (num(0, "user")?, num(1, "item")?, num(2, "rating")?, num(3, "timestamp")?);
        if user < 0 || item < 0 {
            return Err(Error::Parse {
                line: line_no,
                message: "negative id".into(),
            });
        }
        if !(1..=5).contains(&rating) {
            return Err(Error::Data(format!("line {line_no}: rating {rating} outside 1..5")));
        }
        let next_u = users.len() as u32;
        let u = *users.entry(user as u64).or_insert(next_u);
        let next_i = items.len() as u32;
        let i = *items.entry(item as u64).or_insert(next_i);
        if !seen.insert((u, i)) {
            return Err(Error::Data(format!("line {line_no}: duplicate pair ({user}, {item})")));
        }
        interactions.push(Interaction {
            user: u,
            item: i,
            rating: Some(rating as u8),
            timestamp: Some(ts),
        });
    }

    let true_labels = interactions
        .iter()
        .map(|it| u8::from(it.rating == Some(5)))
        .collect();
    ImplicitDataset::new(users.len(), items.len(), interactions, true_labels, BTreeSet::new(), false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_rows() {
        let ds = parse_movielens("1 10 5 100\n1\t11\t2\t200\n").unwrap();
        assert_eq!(ds.num_users, 1);
        assert_eq!(ds.num_items, 2);
        assert_eq!(ds.len(), 2);
        let ratings: Vec<u8> = ds.interactions.iter().map(|i| i.rating.unwrap()).collect();
        assert_eq!(ratings, vec![5, 2]);
        assert_eq!(ds.true_labels, vec![1, 0]);
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        let ds = parse_movielens("").unwrap();
        assert_eq!(ds.num_users, 0);
        assert!(ds.is_empty());
    }

    #[test]
    fn rating_out_of_range_is_data_error() {
        let err = parse_movielens("1 10 9 100\n").unwrap_err();
        assert!(matches!(err, Error::Data(_)));
        assert!(err.to_string().contains("rating 9"), "{err}");
    }

    #[test]
    fn malformed_row_names_line() {
        let err = parse_movielens("1 10 5 100\n1 x 3 4\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_movielens("1 10 5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn loads_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.data");
        std::fs::write(&path, "196\t242\t3\t881250949\n186\t302\t3\t891717742\n196\t377\t5\t878887116\n").unwrap();
        let ds = load_movielens_100k(&path).unwrap();
        assert_eq!((ds.num_users, ds.num_items, ds.len()), (2, 3, 3));
        assert!(load_movielens_100k(&dir.path().join("missing")).is_err());
    }
}

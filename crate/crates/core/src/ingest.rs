//! Raw rating/trust parsing, binarization and the canonical dataset format.
//!
//! Raw files are UTF-8 TSV: `user<TAB>object<TAB>rating` for ratings and
//! `truster<TAB>trustee` for trust, `#` starting a comment line.
//!
//! The canonical file uses dense indices:
//!
//! ```text
//! users 3 objects 4
//! U 0 alice
//! O 0 book-17
//! R 0 0
//! T 0 2
//! ```
//!
//! `U`/`O` tokens run to the end of the line and may contain spaces.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{GraphError, RatingGraph, TrustGraph};

pub const DEFAULT_THRESHOLD: u8 = 3;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("rating threshold must lie in [1, 5], got {0}")]
    BadThreshold(u8),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("trust graph covers {trust} users but rating graph has {rating}")]
    UserCountMismatch { rating: usize, trust: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> IngestError {
    IngestError::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRating {
    pub user: String,
    pub object: String,
    pub rating: u8,
}

/// Yields `(line_number, trimmed_line)` for non-blank, non-comment lines.
fn records<R: BufRead>(reader: R) -> impl Iterator<Item = io::Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(e)),
        Ok(l) => {
            let t = l.trim_end_matches(['\r', '\n']).to_string();
            if t.trim().is_empty() || t.starts_with('#') {
                None
            } else {
                Some(Ok((i + 1, t)))
            }
        }
    })
}

fn token(field: &str, line: usize, what: &str) -> Result<String, IngestError> {
    let t = field.trim();
    if t.is_empty() {
        Err(parse_err(line, format!("empty {what} field")))
    } else {
        Ok(t.to_string())
    }
}

/// Parses a raw rating file. Ratings must be integers in `1..=5`.
pub fn parse_ratings<R: BufRead>(reader: R) -> Result<Vec<RawRating>, IngestError> {
    let mut out = Vec::new();
    for rec in records(reader) {
        let (line, text) = rec?;
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                line,
                format!("expected user<TAB>object<TAB>rating, found {} fields", fields.len()),
            ));
        }
        let rating: u8 = fields[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("rating '{}' is not an integer", fields[2].trim())))?;
        if !(1..=5).contains(&rating) {
            return Err(parse_err(line, format!("rating {rating} outside 1..=5")));
        }
        out.push(RawRating {
            user: token(fields[0], line, "user")?,
            object: token(fields[1], line, "object")?,
            rating,
        });
    }
    Ok(out)
}

/// Parses a raw trust file into `(truster, trustee)` token pairs.
pub fn parse_trust<R: BufRead>(reader: R) -> Result<Vec<(String, String)>, IngestError> {
    let mut out = Vec::new();
    for rec in records(reader) {
        let (line, text) = rec?;
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 2 {
            return Err(parse_err(
                line,
                format!("expected truster<TAB>trustee, found {} fields", fields.len()),
            ));
        }
        out.push((token(fields[0], line, "truster")?, token(fields[1], line, "trustee")?));
    }
    Ok(out)
}

/// Keeps `(user, object)` for every rating of at least `threshold`.
pub fn threshold_ratings(ratings: &[RawRating], threshold: u8) -> Result<Vec<(String, String)>, IngestError> {
    if !(1..=5).contains(&threshold) {
        return Err(IngestError::BadThreshold(threshold));
    }
    Ok(ratings
        .iter()
        .filter(|r| r.rating >= threshold)
        .map(|r| (r.user.clone(), r.object.clone()))
        .collect())
}

/// Bijection between external tokens and dense indices.
#[derive(Debug, Clone, Default)]
pub struct IdMap {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl PartialEq for IdMap {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens
    }
}

impl Eq for IdMap {}

impl IdMap {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Returns the index of `token`, assigning the next one on first sight.
    fn intern(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), i);
        i
    }

    /// Builds a map from tokens listed in index order; `None` on a repeated token.
    pub fn from_tokens(tokens: Vec<String>) -> Option<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return None;
            }
        }
        Some(Self { tokens, index })
    }
}

/// Counters describing what assembly or canonical reading discarded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub kept_links: usize,
    pub duplicate_links: usize,
    pub trust_edges: usize,
    pub dropped_trust: usize,
    pub self_loops: usize,
    pub duplicate_trust: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rating_graph: RatingGraph,
    pub trust_graph: TrustGraph,
    pub users: IdMap,
    pub objects: IdMap,
}

/// Summary counts matching the usual dataset statistics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetStats {
    pub users: usize,
    pub objects: usize,
    pub rating_links: usize,
    pub rating_sparsity: f64,
    pub trust_links: usize,
    pub trust_sparsity: f64,
}

impl Dataset {
    pub fn new(
        rating_graph: RatingGraph,
        trust_graph: TrustGraph,
        users: IdMap,
        objects: IdMap,
    ) -> Result<Self, IngestError> {
        if trust_graph.users() != rating_graph.users() {
            return Err(IngestError::UserCountMismatch {
                rating: rating_graph.users(),
                trust: trust_graph.users(),
            });
        }
        debug_assert_eq!(users.len(), rating_graph.users());
        debug_assert_eq!(objects.len(), rating_graph.objects());
        Ok(Self {
            rating_graph,
            trust_graph,
            users,
            objects,
        })
    }

    /// Wraps graphs whose external ids are simply their indices.
    pub fn from_graphs(rating_graph: RatingGraph, trust_graph: TrustGraph) -> Result<Self, IngestError> {
        let users = IdMap::from_tokens((0..rating_graph.users()).map(|i| i.to_string()).collect())
            .expect("indices are distinct");
        let objects = IdMap::from_tokens((0..rating_graph.objects()).map(|i| i.to_string()).collect())
            .expect("indices are distinct");
        Self::new(rating_graph, trust_graph, users, objects)
    }

    pub fn stats(&self) -> DatasetStats {
        DatasetStats {
            users: self.rating_graph.users(),
            objects: self.rating_graph.objects(),
            rating_links: self.rating_graph.links(),
            rating_sparsity: self.rating_graph.sparsity(),
            trust_links: self.trust_graph.links(),
            trust_sparsity: self.trust_graph.sparsity(),
        }
    }
}

/// Indexes users and objects in first-appearance order over `kept_links` and
/// keeps trust edges whose endpoints both rated something.
pub fn assemble_dataset(
    kept_links: &[(String, String)],
    trust_edges: &[(String, String)],
) -> (Dataset, LoadReport) {
    let mut users = IdMap::default();
    let mut objects = IdMap::default();
    let mut links = Vec::with_capacity(kept_links.len());
    for (u, o) in kept_links {
        links.push((users.intern(u), objects.intern(o)));
    }
    let rating_graph = RatingGraph::new(&links, users.len(), objects.len()).expect("interned indices are in range");

    let mut report = LoadReport {
        kept_links: rating_graph.links(),
        duplicate_links: links.len() - rating_graph.links(),
        ..LoadReport::default()
    };
    let mut edges = Vec::with_capacity(trust_edges.len());
    for (a, b) in trust_edges {
        match (users.index_of(a), users.index_of(b)) {
            (Some(i), Some(j)) if i == j => report.self_loops += 1,
            (Some(i), Some(j)) => edges.push((i, j)),
            _ => report.dropped_trust += 1,
        }
    }
    let trust_graph = TrustGraph::new(&edges, users.len()).expect("interned indices are in range");
    report.trust_edges = trust_graph.links();
    report.duplicate_trust = edges.len() - trust_graph.links();

    let dataset = Dataset::new(rating_graph, trust_graph, users, objects).expect("same user count");
    (dataset, report)
}

/// Reads, thresholds and assembles the two raw files.
pub fn load_raw(
    ratings_path: &Path,
    trust_path: &Path,
    threshold: u8,
) -> Result<(Dataset, LoadReport), IngestError> {
    let ratings = parse_ratings(BufReader::new(File::open(ratings_path)?))?;
    let trust = parse_trust(BufReader::new(File::open(trust_path)?))?;
    let kept = threshold_ratings(&ratings, threshold)?;
    Ok(assemble_dataset(&kept, &trust))
}

/// Writes the canonical form. Output depends only on the dataset contents.
pub fn write_canonical<W: Write>(d: &Dataset, writer: W) -> io::Result<()> {
    let mut w = BufWriter::new(writer);
    let g = &d.rating_graph;
    writeln!(w, "users {} objects {}", g.users(), g.objects())?;
    for (i, t) in d.users.tokens().iter().enumerate() {
        writeln!(w, "U {i} {t}")?;
    }
    for (i, t) in d.objects.tokens().iter().enumerate() {
        writeln!(w, "O {i} {t}")?;
    }
    for (u, o) in g.iter_links() {
        writeln!(w, "R {u} {o}")?;
    }
    for (i, j) in d.trust_graph.iter_edges() {
        writeln!(w, "T {i} {j}")?;
    }
    w.flush()
}

pub fn write_canonical_file(d: &Dataset, path: &Path) -> io::Result<()> {
    write_canonical(d, File::create(path)?)
}

fn parse_index(field: &str, line: usize, bound: usize, what: &str) -> Result<usize, IngestError> {
    let v: usize = field
        .parse()
        .map_err(|_| parse_err(line, format!("expected a {what} index, found '{field}'")))?;
    if v >= bound {
        return Err(parse_err(line, format!("{what} index {v} out of range (< {bound})")));
    }
    Ok(v)
}

/// Reads a canonical file; duplicate link lines are collapsed and counted.
pub fn read_canonical<R: Read>(reader: R) -> Result<(Dataset, LoadReport), IngestError> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let (m, n) = loop {
        let Some((i, line)) = lines.next() else {
            return Err(parse_err(1, "missing header 'users <m> objects <n>'"));
        };
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            ["users", m, "objects", n] => match (m.parse(), n.parse()) {
                (Ok(m), Ok(n)) => break (m, n),
                _ => return Err(parse_err(i + 1, "header counts must be non-negative integers")),
            },
            _ => return Err(parse_err(i + 1, "expected header 'users <m> objects <n>'")),
        }
    };

    let mut user_tokens: Vec<Option<String>> = vec![None; m];
    let mut object_tokens: Vec<Option<String>> = vec![None; n];
    let mut links = Vec::new();
    let mut edges = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (tag, rest) = line.split_once(' ').unwrap_or((line, ""));
        match tag {
            "U" | "O" => {
                let (idx, tok) = rest
                    .split_once(' ')
                    .ok_or_else(|| parse_err(line_no, format!("expected '{tag} <index> <token>'")))?;
                if tok.is_empty() {
                    return Err(parse_err(line_no, "empty token"));
                }
                let slots = if tag == "U" { &mut user_tokens } else { &mut object_tokens };
                let what = if tag == "U" { "user" } else { "object" };
                let idx = parse_index(idx, line_no, slots.len(), what)?;
                if slots[idx].replace(tok.to_string()).is_some() {
                    return Err(parse_err(line_no, format!("{what} index {idx} mapped twice")));
                }
            }
            "R" | "T" => {
                let f: Vec<&str> = rest.split(' ').collect();
                if f.len() != 2 {
                    return Err(parse_err(
                        line_no,
                        format!("expected '{tag} <a> <b>' with 3 columns, found {}", f.len() + 1),
                    ));
                }
                if tag == "R" {
                    links.push((
                        parse_index(f[0], line_no, m, "user")?,
                        parse_index(f[1], line_no, n, "object")?,
                    ));
                } else {
                    edges.push((
                        parse_index(f[0], line_no, m, "user")?,
                        parse_index(f[1], line_no, m, "user")?,
                    ));
                }
            }
            other => return Err(parse_err(line_no, format!("unknown record tag '{other}'"))),
        }
    }

    let collect_map = |slots: Vec<Option<String>>, what: &str| -> Result<IdMap, IngestError> {
        let mut tokens = Vec::with_capacity(slots.len());
        for (i, s) in slots.into_iter().enumerate() {
            tokens.push(s.ok_or_else(|| parse_err(0, format!("{what} index {i} has no id mapping")))?);
        }
        IdMap::from_tokens(tokens).ok_or_else(|| parse_err(0, format!("{what} ids are not unique")))
    };
    let users = collect_map(user_tokens, "user")?;
    let objects = collect_map(object_tokens, "object")?;

    let rating_graph = RatingGraph::new(&links, m, n)?;
    let self_loops = edges.iter().filter(|(a, b)| a == b).count();
    let trust_graph = TrustGraph::new(&edges, m)?;
    let report = LoadReport {
        kept_links: rating_graph.links(),
        duplicate_links: links.len() - rating_graph.links(),
        trust_edges: trust_graph.links(),
        dropped_trust: 0,
        self_loops,
        duplicate_trust: edges.len() - self_loops - trust_graph.links(),
    };
    Ok((Dataset::new(rating_graph, trust_graph, users, objects)?, report))
}

pub fn read_canonical_file(path: &Path) -> Result<(Dataset, LoadReport), IngestError> {
    read_canonical(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(u: &str, o: &str, r: u8) -> RawRating {
        RawRating {
            user: u.into(),
            object: o.into(),
            rating: r,
        }
    }

    fn pairs(v: &[(&str, &str)]) -> Vec<(String, String)> {
        v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn threshold_boundary() {
        assert_eq!(threshold_ratings(&[raw("u", "o", 3)], 3).unwrap(), pairs(&[("u", "o")]));
        assert!(threshold_ratings(&[raw("u", "o", 2)], 3).unwrap().is_empty());
        assert!(threshold_ratings(&[], 3).unwrap().is_empty());
        assert!(matches!(threshold_ratings(&[], 0), Err(IngestError::BadThreshold(0))));
    }

    #[test]
    fn parse_rejects_bad_rating_with_line() {
        let text = "# header\na\tx\t4\n\nb\ty\t6\n";
        match parse_ratings(text.as_bytes()) {
            Err(IngestError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let ok = parse_ratings("a\tx\t4\r\nb\ty\t1\n".as_bytes()).unwrap();
        assert_eq!(ok, vec![raw("a", "x", 4), raw("b", "y", 1)]);
        assert!(parse_ratings("a\tx\n".as_bytes()).is_err());
        assert!(parse_trust("a\tb\tc\n".as_bytes()).is_err());
    }

    #[test]
    fn assembly_drops_unknown_trust() {
        let links = pairs(&[("a", "x"), ("b", "y"), ("a", "y"), ("a", "x")]);
        let trust = pairs(&[("a", "b"), ("b", "c"), ("a", "a"), ("a", "b")]);
        let (d, report) = assemble_dataset(&links, &trust);
        assert_eq!(d.rating_graph.users(), 2);
        assert_eq!(d.rating_graph.objects(), 2);
        assert_eq!(d.rating_graph.links(), 3);
        assert_eq!(d.users.index_of("b"), Some(1));
        assert_eq!(d.objects.token(1), Some("y"));
        assert_eq!(
            report,
            LoadReport {
                kept_links: 3,
                duplicate_links: 1,
                trust_edges: 1,
                dropped_trust: 1,
                self_loops: 1,
                duplicate_trust: 1,
            }
        );
    }

    fn t1_dataset() -> Dataset {
        let links = pairs(&[
            ("u1", "o1"),
            ("u1", "o2"),
            ("u2", "o2"),
            ("u2", "o3"),
            ("u3", "o1"),
            ("u3", "o3"),
            ("u3", "o4"),
        ]);
        assemble_dataset(&links, &pairs(&[("u1", "u3")])).0
    }

    #[test]
    fn canonical_round_trip_t1() {
        let d = t1_dataset();
        let mut buf = Vec::new();
        write_canonical(&d, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("users 3 objects 4\nU 0 u1\n"));
        assert!(text.ends_with("T 0 2\n"));
        let (back, report) = read_canonical(buf.as_slice()).unwrap();
        assert_eq!(back, d);
        assert_eq!(report.duplicate_links, 0);
        let mut again = Vec::new();
        write_canonical(&back, &mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn canonical_tokens_may_contain_spaces() {
        let (d, _) = assemble_dataset(&pairs(&[("Jane Doe", "a book")]), &[]);
        let mut buf = Vec::new();
        write_canonical(&d, &mut buf).unwrap();
        assert_eq!(read_canonical(buf.as_slice()).unwrap().0, d);
    }

    #[test]
    fn canonical_duplicate_line_collapses() {
        let text = "users 1 objects 1\nU 0 a\nO 0 x\nR 0 0\nR 0 0\n";
        let (d, report) = read_canonical(text.as_bytes()).unwrap();
        assert_eq!(d.rating_graph.links(), 1);
        assert_eq!(report.duplicate_links, 1);
    }

    #[test]
    fn canonical_malformed_lines() {
        let four = "users 1 objects 1\nU 0 a\nO 0 x\nR 0 0 1\n";
        match read_canonical(four.as_bytes()) {
            Err(IngestError::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("3 columns"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let range = "users 1 objects 1\nU 0 a\nO 0 x\nR 0 3\n";
        assert!(matches!(read_canonical(range.as_bytes()), Err(IngestError::Parse { line: 4, .. })));
        let missing = "users 2 objects 1\nU 0 a\nO 0 x\n";
        assert!(read_canonical(missing.as_bytes()).is_err());
        assert!(read_canonical("".as_bytes()).is_err());
        assert!(read_canonical("users x objects 1\n".as_bytes()).is_err());
    }

    #[test]
    fn assembly_is_deterministic() {
        let links = pairs(&[("b", "y"), ("a", "x"), ("b", "x")]);
        let (d1, _) = assemble_dataset(&links, &[]);
        let (d2, _) = assemble_dataset(&links, &[]);
        assert_eq!(d1, d2);
        assert_eq!(d1.users.tokens(), &["b".to_string(), "a".to_string()]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_ratings() -> impl Strategy<Value = Vec<RawRating>> {
            proptest::collection::vec((0u8..6, 0u8..8, 1u8..=5), 0..60).prop_map(|v| {
                v.into_iter()
                    .map(|(u, o, r)| raw(&format!("u{u}"), &format!("o {o}"), r))
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn raising_threshold_never_adds(ratings in arb_ratings(), t in 1u8..5) {
                let low = threshold_ratings(&ratings, t).unwrap();
                let high = threshold_ratings(&ratings, t + 1).unwrap();
                prop_assert!(high.len() <= low.len());
                for link in &high {
                    prop_assert!(low.contains(link));
                }
            }

            #[test]
            fn canonical_round_trip(ratings in arb_ratings(), trust in proptest::collection::vec((0u8..7, 0u8..7), 0..20)) {
                let kept = threshold_ratings(&ratings, 3).unwrap();
                let trust: Vec<(String, String)> =
                    trust.into_iter().map(|(a, b)| (format!("u{a}"), format!("u{b}"))).collect();
                let (d, _) = assemble_dataset(&kept, &trust);
                let mut buf = Vec::new();
                write_canonical(&d, &mut buf).unwrap();
                let (back, _) = read_canonical(buf.as_slice()).unwrap();
                prop_assert_eq!(back, d);
            }
        }
    }
}

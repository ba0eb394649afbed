//! Line-oriented snapshot files.
//!
//! ```text
//! PLC 1
//! K <stage>
//! POLICY <error|skip|projective>
//! START <x1> <y1> <x2> <y2> <x3> <y3> <x4> <y4>
//! FRESH <first fresh point index> <first fresh line index>
//! P <a> <b> <c>        one per point, configuration order
//! L <a> <b> <c>        one per line, configuration order
//! SUM <sha-256 of every preceding byte, lowercase hex>
//! ```
//!
//! Integers are canonical decimal, start coordinates canonical `num/den`
//! rationals. Incidence is not stored; loading rebuilds it by exhaustive
//! scan and checks it against the configuration invariants.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use plc_core::{Configuration, HomogeneousTriple, Line, ParallelPolicy, Point, StartConfig};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("checksum mismatch: file says {stored}, content hashes to {computed}")]
    ChecksumMismatch { stored: String, computed: String },
    #[error("unsupported snapshot version {found} (this build reads version {FORMAT_VERSION})")]
    VersionMismatch { found: String },
    #[error("snapshot content is inconsistent: {0}")]
    Integrity(String),
}

fn parse_err(line: usize, msg: impl Into<String>) -> SnapshotError {
    SnapshotError::Parse {
        line,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub version: u32,
    pub stage: u32,
    pub policy: ParallelPolicy,
    pub start: StartConfig,
    pub fresh_points_from: usize,
    pub fresh_lines_from: usize,
    pub points: Vec<Point>,
    pub lines: Vec<Line>,
}

impl Snapshot {
    pub fn from_configuration(
        c: &Configuration,
        policy: ParallelPolicy,
        start: &StartConfig,
    ) -> Self {
        Self {
            version: FORMAT_VERSION,
            stage: c.stage(),
            policy,
            start: start.clone(),
            fresh_points_from: c.fresh_points_from(),
            fresh_lines_from: c.fresh_lines_from(),
            points: c.points().to_vec(),
            lines: c.lines().to_vec(),
        }
    }

    /// Rebuilds the configuration, incidence included, and checks it.
    pub fn to_configuration(&self) -> Result<Configuration, SnapshotError> {
        if self.fresh_points_from > self.points.len() || self.fresh_lines_from > self.lines.len() {
            return Err(SnapshotError::Integrity(
                "fresh frontier beyond record count".into(),
            ));
        }
        let c = Configuration::from_parts(
            self.stage,
            self.points.clone(),
            self.lines.clone(),
            self.fresh_points_from,
            self.fresh_lines_from,
        );
        c.check_invariants().map_err(SnapshotError::Integrity)?;
        Ok(c)
    }

    pub fn render(&self) -> String {
        let mut body = String::new();
        writeln!(body, "PLC {}", self.version).unwrap();
        writeln!(body, "K {}", self.stage).unwrap();
        writeln!(body, "POLICY {}", self.policy).unwrap();
        body.push_str("START");
        for (x, y) in &self.start.points {
            write!(body, " {x} {y}").unwrap();
        }
        body.push('\n');
        writeln!(
            body,
            "FRESH {} {}",
            self.fresh_points_from, self.fresh_lines_from
        )
        .unwrap();
        for p in &self.points {
            push_triple(&mut body, 'P', p.triple());
        }
        for l in &self.lines {
            push_triple(&mut body, 'L', l.triple());
        }
        let sum = checksum(body.as_bytes());
        writeln!(body, "SUM {sum}").unwrap();
        body
    }

    pub fn parse(text: &str) -> Result<Self, SnapshotError> {
        let Some(sum_at) = text.rfind("SUM ") else {
            return Err(parse_err(0, "missing SUM record"));
        };
        if sum_at != 0 && !text[..sum_at].ends_with('\n') {
            return Err(parse_err(0, "SUM record is not on its own line"));
        }
        let (body, sum_line) = text.split_at(sum_at);
        let stored = sum_line
            .strip_prefix("SUM ")
            .and_then(|s| s.strip_suffix('\n'))
            .ok_or_else(|| parse_err(0, "SUM record must be the final line"))?;

        let mut lines = body.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (n, header) = lines.next().ok_or_else(|| parse_err(1, "empty snapshot"))?;
        let version = header
            .strip_prefix("PLC ")
            .ok_or_else(|| parse_err(n, "missing `PLC <version>` header"))?;
        if version != FORMAT_VERSION.to_string() {
            return Err(SnapshotError::VersionMismatch {
                found: version.to_string(),
            });
        }
        let computed = checksum(body.as_bytes());
        if stored != computed {
            return Err(SnapshotError::ChecksumMismatch {
                stored: stored.to_string(),
                computed,
            });
        }

        let mut field = |key: &str| -> Result<(usize, Vec<String>), SnapshotError> {
            let (n, line) = lines
                .next()
                .ok_or_else(|| parse_err(0, format!("missing {key} record")))?;
            let mut toks = line.split(' ');
            if toks.next() != Some(key) {
                return Err(parse_err(n, format!("expected {key} record")));
            }
            Ok((n, toks.map(str::to_string).collect()))
        };
        let (n, k) = field("K")?;
        let stage: u32 = single(n, &k)?;
        if stage == 0 {
            return Err(parse_err(n, "stage index must be at least 1"));
        }
        let (n, p) = field("POLICY")?;
        let policy = ParallelPolicy::from_str(&one_token(n, &p)?).map_err(|e| parse_err(n, e))?;
        let (n, s) = field("START")?;
        if s.len() != 8 {
            return Err(parse_err(n, "START needs 8 coordinates"));
        }
        let coords = s
            .iter()
            .map(|t| canonical_rational(n, t))
            .collect::<Result<Vec<_>, _>>()?;
        let start = StartConfig {
            points: [0, 1, 2, 3].map(|i| (coords[2 * i].clone(), coords[2 * i + 1].clone())),
        };
        let (n, f) = field("FRESH")?;
        if f.len() != 2 {
            return Err(parse_err(n, "FRESH needs 2 indices"));
        }
        let fresh_points_from = single(n, &f[..1])?;
        let fresh_lines_from = single(n, &f[1..])?;

        let mut points = Vec::new();
        let mut lines_out = Vec::new();
        for (n, line) in lines {
            let (tag, rest) = line
                .split_once(' ')
                .ok_or_else(|| parse_err(n, "malformed record"))?;
            let t = canonical_triple(n, rest)?;
            match tag {
                "P" if lines_out.is_empty() => points.push(Point::new(t)),
                "P" => return Err(parse_err(n, "P record after L records")),
                "L" => lines_out.push(Line::new(t)),
                other => return Err(parse_err(n, format!("unknown record `{other}`"))),
            }
        }
        Ok(Self {
            version: FORMAT_VERSION,
            stage,
            policy,
            start,
            fresh_points_from,
            fresh_lines_from,
            points,
            lines: lines_out,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), SnapshotError> {
        let tmp = path.with_extension("plc.tmp");
        fs::write(&tmp, self.render()).map_err(|source| SnapshotError::Io {
            path: tmp.clone(),
            source,
        })?;
        fs::rename(&tmp, path).map_err(|source| SnapshotError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self, SnapshotError> {
        let text = fs::read_to_string(path).map_err(|source| SnapshotError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}

/// File name used for the snapshot of stage `k`.
pub fn snapshot_file_name(k: u32) -> String {
    format!("stage-{k:03}.plc")
}

pub fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn push_triple(out: &mut String, tag: char, t: &HomogeneousTriple) {
    writeln!(out, "{tag} {} {} {}", t.a(), t.b(), t.c()).unwrap();
}

fn one_token(n: usize, toks: &[String]) -> Result<String, SnapshotError> {
    match toks {
        [t] => Ok(t.clone()),
        _ => Err(parse_err(n, "expected exactly one value")),
    }
}

fn single<T: FromStr>(n: usize, toks: &[String]) -> Result<T, SnapshotError> {
    let t = one_token(n, toks)?;
    if t.len() > 1 && t.starts_with('0') {
        return Err(parse_err(n, format!("non-canonical integer `{t}`")));
    }
    t.parse()
        .map_err(|_| parse_err(n, format!("bad integer `{t}`")))
}

fn canonical_int(n: usize, t: &str) -> Result<BigInt, SnapshotError> {
    let v: BigInt = t
        .parse()
        .map_err(|_| parse_err(n, format!("bad integer `{t}`")))?;
    if v.to_string() != t {
        return Err(parse_err(n, format!("non-canonical integer `{t}`")));
    }
    Ok(v)
}

fn canonical_triple(n: usize, rest: &str) -> Result<HomogeneousTriple, SnapshotError> {
    let toks: Vec<&str> = rest.split(' ').collect();
    let [a, b, c] = toks.as_slice() else {
        return Err(parse_err(n, "expected three integers"));
    };
    let (a, b, c) = (
        canonical_int(n, a)?,
        canonical_int(n, b)?,
        canonical_int(n, c)?,
    );
    if !HomogeneousTriple::is_canonical(&a, &b, &c) {
        return Err(parse_err(n, "triple is not in canonical form"));
    }
    Ok(HomogeneousTriple::normalize(a, b, c).expect("canonical triples are nonzero"))
}

fn canonical_rational(n: usize, t: &str) -> Result<BigRational, SnapshotError> {
    let v: BigRational = t
        .parse()
        .map_err(|_| parse_err(n, format!("bad rational `{t}`")))?;
    if v.to_string() != t {
        return Err(parse_err(n, format!("non-canonical rational `{t}`")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use plc_core::{Budget, Engine};

    fn stage2() -> (Configuration, Snapshot) {
        let e = Engine::new(ParallelPolicy::Skip, Budget::default(), 1);
        let start = StartConfig::canonical();
        let c = e.init(&start).unwrap();
        let (c2, _) = e.run_stage(&c).unwrap();
        let s = Snapshot::from_configuration(&c2, ParallelPolicy::Skip, &start);
        (c2, s)
    }

    #[test]
    fn layout() {
        let (_, s) = stage2();
        let text = s.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "PLC 1");
        assert_eq!(lines[1], "K 2");
        assert_eq!(lines[2], "POLICY skip");
        assert_eq!(lines[3], "START 0 0 1 0 0 1 5 7");
        assert_eq!(lines[4], "FRESH 4 6");
        assert_eq!(lines.iter().filter(|l| l.starts_with("P ")).count(), 7);
        assert_eq!(lines.iter().filter(|l| l.starts_with("L ")).count(), 9);
        assert!(lines.last().unwrap().starts_with("SUM "));
        assert!(lines.contains(&"P 5 0 -6"));
    }

    #[test]
    fn round_trip() {
        let (c2, s) = stage2();
        let text = s.render();
        let back = Snapshot::parse(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.render(), text);
        assert_eq!(back.to_configuration().unwrap(), c2);
    }

    #[test]
    fn corruption_is_detected() {
        let (_, s) = stage2();
        let text = s.render().replacen("P 5 0 -6", "P 5 0 -7", 1);
        assert!(matches!(
            Snapshot::parse(&text),
            Err(SnapshotError::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn future_version_is_rejected() {
        let (_, s) = stage2();
        let text = s.render().replacen("PLC 1", "PLC 2", 1);
        assert!(matches!(
            Snapshot::parse(&text),
            Err(SnapshotError::VersionMismatch { .. })
        ));
    }

    /// Re-signs an edited body so that only the targeted check can fail.
    fn resign(body_with_sum: &str, from: &str, to: &str) -> String {
        let body = &body_with_sum[..body_with_sum.rfind("SUM ").unwrap()];
        let body = body.replacen(from, to, 1);
        format!("{body}SUM {}\n", checksum(body.as_bytes()))
    }

    #[test]
    fn non_canonical_records_are_rejected() {
        let (_, s) = stage2();
        let text = s.render();
        for (from, to) in [
            ("P 5 0 -6", "P 10 0 -12"),
            ("P 5 0 -6", "P -5 0 6"),
            ("K 2", "K 02"),
        ] {
            let bad = resign(&text, from, to);
            assert!(
                matches!(Snapshot::parse(&bad), Err(SnapshotError::Parse { .. })),
                "{to}"
            );
        }
    }

    #[test]
    fn inconsistent_content_is_rejected() {
        let (_, s) = stage2();
        // a point off every line fails the degree invariants after rebuild
        let bad = resign(&s.render(), "P 5 0 -6", "P 1000 999 1");
        let snap = Snapshot::parse(&bad).unwrap();
        assert!(matches!(
            snap.to_configuration(),
            Err(SnapshotError::Integrity(_))
        ));
    }

    #[test]
    fn truncated_file() {
        let (_, s) = stage2();
        let text = s.render();
        let cut = &text[..text.len() / 2];
        assert!(Snapshot::parse(cut).is_err());
    }
}

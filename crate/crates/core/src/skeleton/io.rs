use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{Frame, SkeletonSequence, NUM_JOINTS};
use crate::error::{Error, Result};

pub const MANIFEST_HEADER: &str = "path,label,subject,instance";

/// One row of a dataset manifest. `path` is resolved against the manifest's
/// directory when relative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub path: PathBuf,
    pub label: u32,
    pub subject: u32,
    pub instance: u32,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn parse_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let text = read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == MANIFEST_HEADER => {}
        _ => {
            return Err(Error::parse(
                path,
                1,
                format!("expected header `{MANIFEST_HEADER}`"),
            ))
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 || fields[0].is_empty() {
            return Err(Error::parse(
                path,
                lineno,
                "expected 4 comma-separated fields",
            ));
        }
        let positive = |name: &str, s: &str| -> Result<u32> {
            match s.parse::<u32>() {
                Ok(v) if v >= 1 => Ok(v),
                _ => Err(Error::parse(
                    path,
                    lineno,
                    format!("{name} must be a positive integer, got `{s}`"),
                )),
            }
        };
        let file = PathBuf::from(fields[0]);
        rows.push(ManifestRow {
            path: if file.is_absolute() {
                file
            } else {
                base.join(file)
            },
            label: positive("label", fields[1])?,
            subject: positive("subject", fields[2])?,
            instance: positive("instance", fields[3])?,
        });
    }
    Ok(rows)
}

/// Loads every sequence listed in a manifest, in manifest order.
pub fn load_manifest(path: &Path) -> Result<Vec<SkeletonSequence>> {
    let rows = parse_manifest(path)?;
    rows.par_iter()
        .map(|row| {
            Ok(SkeletonSequence {
                frames: load_skeleton_file(&row.path)?,
                label: row.label,
                subject: row.subject,
                instance: row.instance,
            })
        })
        .collect()
}

struct Lines<'a> {
    path: &'a Path,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(path: &'a Path, text: &'a str) -> Self {
        Lines {
            path,
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next non-blank line, split on whitespace.
    fn next_tokens(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (idx, line) in self.inner.by_ref() {
            self.last = idx + 1;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if !toks.is_empty() {
                return Ok((idx + 1, toks));
            }
        }
        Err(Error::parse(
            self.path,
            self.last + 1,
            "unexpected end of file",
        ))
    }

    fn peek_is_eof(&self) -> bool {
        self.inner.clone().all(|(_, l)| l.trim().is_empty())
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.path, line, msg)
    }

    fn int(&self, line: usize, tok: &str) -> Result<usize> {
        tok.parse()
            .map_err(|_| self.err(line, format!("expected an integer, got `{tok}`")))
    }

    fn coords(&self, line: usize, toks: &[&str]) -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for (o, t) in out.iter_mut().zip(toks) {
            let v: f64 = t
                .parse()
                .map_err(|_| self.err(line, format!("expected a number, got `{t}`")))?;
            if !v.is_finite() {
                return Err(self.err(line, format!("non-finite coordinate `{t}`")));
            }
            *o = v;
        }
        Ok(out)
    }
}

/// Loads one skeleton file. Both the canonical text layout and the MSR
/// world/screen layout are accepted; the layout is detected from the line
/// following the header.
pub fn load_skeleton_file(path: &Path) -> Result<Vec<Frame>> {
    let text = read_to_string(path)?;
    let mut lines = Lines::new(path, &text);
    let (hline, header) = lines.next_tokens()?;
    if header.len() != 2 {
        return Err(lines.err(hline, "expected header `<num_frames> <num_joints>`"));
    }
    let num_frames = lines.int(hline, header[0])?;
    let num_joints = lines.int(hline, header[1])?;
    if num_joints != NUM_JOINTS {
        return Err(lines.err(
            hline,
            format!("expected {NUM_JOINTS} joints, header says {num_joints}"),
        ));
    }
    if num_frames == 0 {
        return Err(lines.err(hline, "file declares zero frames"));
    }

    let (first_line, first) = lines.next_tokens()?;
    let frames = if first.len() == 1 {
        parse_msr(&mut lines, num_frames, (first_line, first))?
    } else {
        parse_canonical(&mut lines, num_frames, (first_line, first))?
    };
    if !lines.peek_is_eof() {
        let (l, _) = lines.next_tokens()?;
        return Err(lines.err(l, "trailing data after the last frame"));
    }
    if frames.is_empty() {
        return Err(lines.err(hline, "no tracked frames"));
    }
    Ok(frames)
}

fn parse_canonical<'a>(
    lines: &mut Lines<'a>,
    num_frames: usize,
    first: (usize, Vec<&'a str>),
) -> Result<Vec<Frame>> {
    let mut frames = Vec::with_capacity(num_frames);
    let mut pending = Some(first);
    for _ in 0..num_frames {
        let mut frame = [[0.0; 3]; NUM_JOINTS];
        for joint in frame.iter_mut() {
            let (line, toks) = match pending.take() {
                Some(p) => p,
                None => lines.next_tokens()?,
            };
            if toks.len() != 3 {
                return Err(lines.err(line, format!("expected `x y z`, got {} fields", toks.len())));
            }
            *joint = lines.coords(line, &toks)?;
        }
        frames.push(frame);
    }
    Ok(frames)
}

fn parse_msr<'a>(
    lines: &mut Lines<'a>,
    num_frames: usize,
    first: (usize, Vec<&'a str>),
) -> Result<Vec<Frame>> {
    let mut frames = Vec::with_capacity(num_frames);
    let mut pending = Some(first);
    for _ in 0..num_frames {
        let (line, toks) = match pending.take() {
            Some(p) => p,
            None => lines.next_tokens()?,
        };
        if toks.len() != 1 {
            return Err(lines.err(line, "expected the per-frame row count"));
        }
        let rows = lines.int(line, toks[0])?;
        // untracked frame
        if rows == 0 {
            continue;
        }
        if rows != 2 * NUM_JOINTS {
            return Err(lines.err(
                line,
                format!(
                    "expected {} rows (world + screen per joint), got {rows}",
                    2 * NUM_JOINTS
                ),
            ));
        }
        let mut frame = [[0.0; 3]; NUM_JOINTS];
        for r in 0..rows {
            let (line, toks) = lines.next_tokens()?;
            if toks.len() != 4 {
                return Err(lines.err(
                    line,
                    format!("expected `x y z conf`, got {} fields", toks.len()),
                ));
            }
            if r % 2 == 0 {
                frame[r / 2] = lines.coords(line, &toks[..3])?;
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

/// Writes frames in the canonical text layout.
pub fn write_canonical(path: &Path, frames: &[Frame]) -> Result<()> {
    let mut out = String::with_capacity(frames.len() * NUM_JOINTS * 32);
    let _ = writeln!(out, "{} {}", frames.len(), NUM_JOINTS);
    for frame in frames {
        for p in frame {
            let _ = writeln!(out, "{:.6} {:.6} {:.6}", p[0], p[1], p[2]);
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn canonical_text(frames: usize) -> String {
        let mut s = format!("{frames} 20\n");
        for f in 0..frames {
            for j in 0..20 {
                s += &format!("{} {} {}\n", j as f64 * 0.1, f as f64, -0.5);
            }
        }
        s
    }

    #[test]
    fn canonical_three_frames() {
        let dir = TempDir::new().unwrap();
        let p = dir.path().join("a.txt");
        fs::write(&p, canonical_text(3)).unwrap();
        let frames = load_skeleton_file(&p).unwrap();
        assert_eq!(frames.len(), 3);
        assert_eq!(frames[2][4], [0.4, 2.0, -0.5]);
    }

    #[test]
    fn wrong_joint_count_is_reported_with_line() {
        let dir = TempDir::new().unwrap();
        let p = dir.path().join("a.txt");
        fs::write(&p, "2 15\n").unwrap();
        let err = load_skeleton_file(&p).unwrap_err().to_string();
        assert!(err.contains("a.txt:1"), "{err}");

        // frame truncated: 2 frames declared, only 1 present
        let text = canonical_text(1).replacen("1 20", "2 20", 1);
        fs::write(&p, text).unwrap();
        assert!(load_skeleton_file(&p).is_err());
    }

    #[test]
    fn non_finite_coordinate_is_an_error() {
        let dir = TempDir::new().unwrap();
        let p = dir.path().join("a.txt");
        let text = canonical_text(1).replacen("0 0 -0.5", "0 NaN -0.5", 1);
        fs::write(&p, text).unwrap();
        let err = load_skeleton_file(&p).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
    }

    #[test]
    fn msr_layout_takes_world_rows() {
        let dir = TempDir::new().unwrap();
        let p = dir.path().join("msr.txt");
        let mut s = String::from("2 20\n");
        // first frame untracked
        s += "0\n";
        s += "40\n";
        for j in 0..20 {
            s += &format!("{} 1.0 2.0 0.9\n", j);
            s += "320 240 1500 0.9\n";
        }
        fs::write(&p, s).unwrap();
        let frames = load_skeleton_file(&p).unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0][7], [7.0, 1.0, 2.0]);
    }

    #[test]
    fn msr_bad_row_count() {
        let dir = TempDir::new().unwrap();
        let p = dir.path().join("msr.txt");
        fs::write(&p, "1 20\n39\n").unwrap();
        let err = load_skeleton_file(&p).unwrap_err().to_string();
        assert!(err.contains("msr.txt:2"), "{err}");
    }

    #[test]
    fn manifest_rows_in_order() {
        let dir = TempDir::new().unwrap();
        fs::write(dir.path().join("a.txt"), canonical_text(3)).unwrap();
        fs::write(dir.path().join("b.txt"), canonical_text(5)).unwrap();
        let m = dir.path().join("manifest.csv");
        fs::write(
            &m,
            "path,label,subject,instance\nb.txt,2,1,1\na.txt,1,3,2\n",
        )
        .unwrap();
        let seqs = load_manifest(&m).unwrap();
        assert_eq!(seqs.len(), 2);
        assert_eq!((seqs[0].len(), seqs[0].label), (5, 2));
        assert_eq!(
            (seqs[1].len(), seqs[1].subject, seqs[1].instance),
            (3, 3, 2)
        );
    }

    #[test]
    fn manifest_missing_file_names_path() {
        let dir = TempDir::new().unwrap();
        let m = dir.path().join("manifest.csv");
        fs::write(&m, "path,label,subject,instance\nnope.txt,1,1,1\n").unwrap();
        let err = load_manifest(&m).unwrap_err().to_string();
        assert!(err.contains("nope.txt"), "{err}");
    }

    #[test]
    fn manifest_malformed_rows() {
        let dir = TempDir::new().unwrap();
        let m = dir.path().join("manifest.csv");
        fs::write(&m, "path,label,subject,instance\na.txt,0,1,1\n").unwrap();
        let err = parse_manifest(&m).unwrap_err().to_string();
        assert!(
            err.contains("manifest.csv:2") && err.contains("label"),
            "{err}"
        );
        fs::write(&m, "path,label,subject\n").unwrap();
        assert!(parse_manifest(&m).is_err());
        fs::write(&m, "path,label,subject,instance\na.txt,1,1\n").unwrap();
        assert!(parse_manifest(&m).is_err());
    }

    #[test]
    fn canonical_round_trip() {
        let dir = TempDir::new().unwrap();
        let p = dir.path().join("rt.txt");
        let frames = vec![[[0.25, -1.5, 3.125]; NUM_JOINTS]; 4];
        write_canonical(&p, &frames).unwrap();
        assert_eq!(load_skeleton_file(&p).unwrap(), frames);
    }
}

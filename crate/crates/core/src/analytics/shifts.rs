//! Per-bucket shifts from scored posts.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, IdMap, NodeId};

/// A scored post. Buckets are caller-defined time units (weeks, months).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostRecord {
    pub user: u64,
    pub bucket: u32,
    pub toxicity: f64,
}

/// Reads `user_id,bucket,toxicity` rows; the header is required.
pub fn read_posts<R: Read>(source: R) -> Result<Vec<PostRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(source);
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["user_id", "bucket", "toxicity"] {
        return Err(Error::parse(
            1,
            "expected header \"user_id,bucket,toxicity\"",
        ));
    }
    let mut posts = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(Error::parse(line, "expected 3 fields"));
        }
        let user = rec[0]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad user id {:?}", &rec[0])))?;
        let bucket = rec[1]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad bucket {:?}", &rec[1])))?;
        let toxicity: f64 = rec[2]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad toxicity {:?}", &rec[2])))?;
        if !(0.0..=1.0).contains(&toxicity) {
            return Err(Error::parse(
                line,
                format!("toxicity {toxicity} outside [0, 1]"),
            ));
        }
        posts.push(PostRecord {
            user,
            bucket,
            toxicity,
        });
    }
    Ok(posts)
}

pub fn write_posts<W: Write>(mut w: W, posts: &[PostRecord]) -> Result<()> {
    writeln!(w, "user_id,bucket,toxicity")?;
    for p in posts {
        writeln!(w, "{},{},{}", p.user, p.bucket, p.toxicity)?;
    }
    w.flush()?;
    Ok(())
}

/// How the in-neighbourhood toxicity of a bucket is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeighborAveraging {
    /// Mean of each neighbour's own mean, so prolific posters do not dominate.
    #[default]
    UserWeighted,
    /// Mean over all neighbour posts.
    PostWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftSample {
    pub user: NodeId,
    pub bucket: u32,
    pub self_avg: f64,
    /// Average incoming toxicity for this bucket.
    pub neigh_avg: f64,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftExtraction {
    /// Sorted by `(user, bucket)`.
    pub samples: Vec<ShiftSample>,
    /// Posts whose author is not in the id map.
    pub unresolved_posts: usize,
    pub unresolved_users: usize,
}

/// One sample per `(user, bucket)` in which the user and at least one of its
/// in-neighbours posted: `shift = own mean - neighbourhood mean`.
pub fn compute_shifts(
    posts: &[PostRecord],
    g: &DirectedGraph,
    ids: &IdMap,
    averaging: NeighborAveraging,
) -> Result<ShiftExtraction> {
    // (node, bucket) -> (sum, count)
    let mut agg: HashMap<(u32, u32), (f64, usize)> = HashMap::new();
    let mut unresolved_posts = 0;
    let mut unresolved = std::collections::HashSet::new();
    for p in posts {
        if !(0.0..=1.0).contains(&p.toxicity) {
            return Err(Error::invalid(format!(
                "post by {} has toxicity {} outside [0, 1]",
                p.user, p.toxicity
            )));
        }
        match ids.internal(p.user) {
            Some(v) if v.index() < g.node_count() => {
                let e = agg.entry((v.0, p.bucket)).or_insert((0.0, 0));
                e.0 += p.toxicity;
                e.1 += 1;
            }
            _ => {
                unresolved_posts += 1;
                unresolved.insert(p.user);
            }
        }
    }

    let mut keys: Vec<(u32, u32)> = agg.keys().copied().collect();
    keys.sort_unstable();
    let mut samples = Vec::new();
    for (v, bucket) in keys {
        let (sum, count) = agg[&(v, bucket)];
        let self_avg = sum / count as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for u in g.in_neighbors(NodeId(v)) {
            if let Some(&(s, c)) = agg.get(&(u.0, bucket)) {
                match averaging {
                    NeighborAveraging::UserWeighted => {
                        num += s / c as f64;
                        den += 1.0;
                    }
                    NeighborAveraging::PostWeighted => {
                        num += s;
                        den += c as f64;
                    }
                }
            }
        }
        if den == 0.0 {
            continue;
        }
        let neigh_avg = num / den;
        samples.push(ShiftSample {
            user: NodeId(v),
            bucket,
            self_avg,
            neigh_avg,
            shift: (self_avg - neigh_avg).clamp(-1.0, 1.0),
        });
    }
    Ok(ShiftExtraction {
        samples,
        unresolved_posts,
        unresolved_users: unresolved.len(),
    })
}

pub fn write_shift_samples<W: Write>(mut w: W, samples: &[ShiftSample], ids: &IdMap) -> Result<()> {
    writeln!(w, "user_id,bucket,self_avg,neigh_avg,shift")?;
    for s in samples {
        let user = ids.external(s.user).unwrap_or(s.user.0 as u64);
        writeln!(
            w,
            "{user},{},{:.6},{:.6},{:.6}",
            s.bucket, s.self_avg, s.neigh_avg, s.shift
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(user: u64, bucket: u32, toxicity: f64) -> PostRecord {
        PostRecord {
            user,
            bucket,
            toxicity,
        }
    }

    fn fan_in() -> (DirectedGraph, IdMap) {
        // 1 -> 0, 2 -> 0
        let g = DirectedGraph::from_edges(3, [(1, 0), (2, 0)]).unwrap().0;
        (g, IdMap::identity(3))
    }

    #[test]
    fn user_minus_neighbourhood() {
        let (g, ids) = fan_in();
        let posts = [
            post(0, 3, 0.4),
            post(0, 3, 0.6),
            post(1, 3, 0.2),
            post(2, 3, 0.4),
        ];
        let out = compute_shifts(&posts, &g, &ids, NeighborAveraging::UserWeighted).unwrap();
        assert_eq!(out.samples.len(), 1);
        let s = out.samples[0];
        assert_eq!((s.user, s.bucket), (NodeId(0), 3));
        assert!((s.self_avg - 0.5).abs() < 1e-12);
        assert!((s.neigh_avg - 0.3).abs() < 1e-12);
        assert!((s.shift - 0.2).abs() < 1e-12);
    }

    #[test]
    fn no_neighbour_post_no_sample() {
        let (g, ids) = fan_in();
        let posts = [post(0, 1, 0.5), post(1, 2, 0.3)];
        let out = compute_shifts(&posts, &g, &ids, NeighborAveraging::UserWeighted).unwrap();
        assert!(out.samples.is_empty());
    }

    #[test]
    fn identical_toxicity_zero_shift() {
        let g = crate::graph::generate_er(60, 0.1, 3).unwrap();
        let ids = IdMap::identity(60);
        let posts: Vec<_> = (0..60u64)
            .flat_map(|u| (0..4).map(move |b| post(u, b, 0.37)))
            .collect();
        let out = compute_shifts(&posts, &g, &ids, NeighborAveraging::PostWeighted).unwrap();
        assert!(!out.samples.is_empty());
        assert!(out.samples.iter().all(|s| s.shift.abs() < 1e-12));
    }

    #[test]
    fn averaging_modes_differ_with_prolific_neighbour() {
        let (g, ids) = fan_in();
        let posts = [
            post(0, 0, 0.5),
            post(1, 0, 0.0),
            post(1, 0, 0.0),
            post(1, 0, 0.0),
            post(2, 0, 0.8),
        ];
        let uw = compute_shifts(&posts, &g, &ids, NeighborAveraging::UserWeighted).unwrap();
        let pw = compute_shifts(&posts, &g, &ids, NeighborAveraging::PostWeighted).unwrap();
        assert!((uw.samples[0].neigh_avg - 0.4).abs() < 1e-12);
        assert!((pw.samples[0].neigh_avg - 0.2).abs() < 1e-12);
    }

    #[test]
    fn unresolved_users_counted() {
        let (g, ids) = fan_in();
        let posts = [
            post(0, 0, 0.5),
            post(99, 0, 0.1),
            post(99, 1, 0.1),
            post(7, 0, 0.2),
        ];
        let out = compute_shifts(&posts, &g, &ids, NeighborAveraging::UserWeighted).unwrap();
        assert_eq!(out.unresolved_posts, 3);
        assert_eq!(out.unresolved_users, 2);
    }

    #[test]
    fn posts_csv() {
        let text = "user_id,bucket,toxicity\n5,0,0.25\n6,1,1\n";
        let posts = read_posts(text.as_bytes()).unwrap();
        assert_eq!(posts, vec![post(5, 0, 0.25), post(6, 1, 1.0)]);
        let mut buf = Vec::new();
        write_posts(&mut buf, &posts).unwrap();
        assert_eq!(read_posts(buf.as_slice()).unwrap(), posts);

        assert!(read_posts("user,bucket,toxicity\n1,0,0.5\n".as_bytes()).is_err());
        assert!(matches!(
            read_posts("user_id,bucket,toxicity\n1,0,1.5\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(read_posts("user_id,bucket,toxicity\n1,-1,0.5\n".as_bytes()).is_err());
    }
}

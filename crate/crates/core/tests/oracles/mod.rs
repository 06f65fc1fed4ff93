//! Slow, obviously-correct reference implementations used to check the
//! library. Nothing here calls into the library's scoring code.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rsrag_core::store::{CollectionKind, VectorStore};

pub fn naive_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn grams(t: &[String], n: usize) -> Vec<Vec<String>> {
    if t.len() < n {
        return Vec::new();
    }
    (0..=t.len() - n).map(|i| t[i..i + n].to_vec()).collect()
}

fn count(list: &[Vec<String>], g: &[String]) -> usize {
    list.iter().filter(|x| x.as_slice() == g).count()
}

/// Cumulative BLEU-n, no smoothing, closest reference length (shorter on a tie).
pub fn bleu(c: &[String], refs: &[Vec<String>], n: usize) -> f64 {
    let mut log_sum = 0.0;
    for k in 1..=n {
        let cg = grams(c, k);
        if cg.is_empty() {
            return 0.0;
        }
        let mut clipped = 0usize;
        let mut seen: Vec<Vec<String>> = Vec::new();
        for g in &cg {
            if seen.contains(g) {
                continue;
            }
            seen.push(g.clone());
            let max_ref = refs.iter().map(|r| count(&grams(r, k), g)).max().unwrap_or(0);
            clipped += count(&cg, g).min(max_ref);
        }
        if clipped == 0 {
            return 0.0;
        }
        log_sum += (clipped as f64 / cg.len() as f64).ln() / n as f64;
    }
    let clen = c.len() as f64;
    let mut best = refs[0].len();
    for r in refs {
        let (d, bd) = ((r.len() as f64 - clen).abs(), (best as f64 - clen).abs());
        if d < bd || (d == bd && r.len() < best) {
            best = r.len();
        }
    }
    let bp = if clen > best as f64 { 1.0 } else { (1.0 - best as f64 / clen).exp() };
    bp * log_sum.exp()
}

/// Longest common subsequence by enumerating every subsequence of `a`
/// (exponential; inputs must be short).
pub fn lcs_brute(a: &[String], b: &[String]) -> usize {
    assert!(a.len() <= 16, "brute-force LCS needs a short candidate");
    let is_subseq = |mask: u32| {
        let mut j = 0;
        for (i, t) in a.iter().enumerate() {
            if mask >> i & 1 == 1 {
                while j < b.len() && &b[j] != t {
                    j += 1;
                }
                if j == b.len() {
                    return false;
                }
                j += 1;
            }
        }
        true
    };
    (0u32..1 << a.len())
        .filter(|&m| is_subseq(m))
        .map(|m| m.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

pub fn rouge_l(c: &[String], refs: &[Vec<String>]) -> f64 {
    let beta2 = 1.2f64 * 1.2;
    refs.iter()
        .map(|r| {
            let l = lcs_brute(c, r) as f64;
            if l == 0.0 {
                return 0.0;
            }
            let (p, rec) = (l / c.len() as f64, l / r.len() as f64);
            (1.0 + beta2) * p * rec / (rec + beta2 * p)
        })
        .fold(0.0, f64::max)
}

pub fn meteor(c: &[String], refs: &[Vec<String>]) -> f64 {
    refs.iter()
        .map(|r| {
            let mut used = vec![false; r.len()];
            let mut align: Vec<Option<usize>> = Vec::new();
            for t in c {
                let hit = (0..r.len()).find(|&j| !used[j] && &r[j] == t);
                if let Some(j) = hit {
                    used[j] = true;
                }
                align.push(hit);
            }
            let m = align.iter().flatten().count();
            if m == 0 {
                return 0.0;
            }
            let mut chunks = 0;
            let mut prev: Option<usize> = None;
            for a in &align {
                match (*a, prev) {
                    (Some(j), Some(p)) if j == p + 1 => {}
                    (Some(_), _) => chunks += 1,
                    (None, _) => {}
                }
                prev = *a;
            }
            let (p, rec) = (m as f64 / c.len() as f64, m as f64 / r.len() as f64);
            let f = 10.0 * p * rec / (rec + 9.0 * p);
            f * (1.0 - 0.5 * (chunks as f64 / m as f64).powi(3))
        })
        .fold(0.0, f64::max)
}

pub fn cider(items: &[(Vec<String>, Vec<Vec<String>>)]) -> f64 {
    let n_items = items.len() as f64;
    let mut total = 0.0;
    for (c, refs) in items {
        let mut item = 0.0;
        for n in 1..=4 {
            let df = |g: &Vec<String>| {
                items
                    .iter()
                    .filter(|(_, rs)| rs.iter().any(|r| grams(r, n).contains(g)))
                    .count()
                    .max(1) as f64
            };
            let vector = |t: &[String]| -> BTreeMap<Vec<String>, f64> {
                let gs = grams(t, n);
                let mut v = BTreeMap::new();
                for g in &gs {
                    let tf = count(&gs, g) as f64 / gs.len() as f64;
                    v.insert(g.clone(), tf * (n_items / df(g)).ln());
                }
                v
            };
            let vc = vector(c);
            let mut sim = 0.0;
            for r in refs {
                let vr = vector(r);
                let dot: f64 = vc.iter().map(|(g, x)| x * vr.get(g).copied().unwrap_or(0.0)).sum();
                let nc = vc.values().map(|x| x * x).sum::<f64>().sqrt();
                let nr = vr.values().map(|x| x * x).sum::<f64>().sqrt();
                sim += if nc == 0.0 || nr == 0.0 { 0.0 } else { dot / (nc * nr) };
            }
            item += sim / refs.len() as f64 / 4.0;
        }
        total += item;
    }
    10.0 * total / n_items
}

pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    dot / (nu * nv)
}

fn stored(store: &VectorStore, kind: CollectionKind, entry: &str) -> Vec<f64> {
    store
        .get_vector(kind, entry)
        .expect("entry exists")
        .iter()
        .map(|&x| x as f64)
        .collect()
}

/// Best cosine between `q` and any entry of `record` in `kind`; 0 when the
/// record or the query lacks that side.
pub fn side_score(store: &VectorStore, kind: CollectionKind, record: &str, q: Option<&[f64]>) -> f64 {
    let Some(q) = q else { return 0.0 };
    store
        .record_entries(kind, record)
        .iter()
        .map(|e| cosine(q, &stored(store, kind, e)))
        .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))))
        .unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleHit {
    pub record_id: String,
    pub s_t: f64,
    pub s_i: f64,
    pub fused: f64,
}

/// Exhaustive fused ranking over every record with an entry on a side the
/// query covers.
pub fn brute_force_ranking(
    store: &VectorStore,
    q_text: Option<&[f64]>,
    q_image: Option<&[f64]>,
    alpha: f64,
    k: usize,
) -> Vec<OracleHit> {
    let mut records: Vec<String> = Vec::new();
    if q_text.is_some() {
        records.extend(store.record_ids(CollectionKind::Text).map(String::from));
    }
    if q_image.is_some() {
        records.extend(store.record_ids(CollectionKind::Image).map(String::from));
    }
    records.sort();
    records.dedup();
    let mut hits: Vec<OracleHit> = records
        .into_iter()
        .map(|r| {
            let s_t = side_score(store, CollectionKind::Text, &r, q_text);
            let s_i = side_score(store, CollectionKind::Image, &r, q_image);
            OracleHit {
                fused: (1.0 - alpha) * s_t + alpha * s_i,
                record_id: r,
                s_t,
                s_i,
            }
        })
        .collect();
    hits.sort_by(|a, b| b.fused.partial_cmp(&a.fused).unwrap().then_with(|| a.record_id.cmp(&b.record_id)));
    hits.truncate(k);
    hits
}

/// Exact top-k row ids of a collection by full scan.
pub fn exact_top_entries(store: &VectorStore, kind: CollectionKind, q: &[f64], k: usize) -> Vec<String> {
    let mut scored: Vec<(f64, String, String)> = store
        .entry_ids(kind)
        .iter()
        .map(|e| {
            let r = store.get_record_id(kind, e).unwrap_or_default().to_string();
            (cosine(q, &stored(store, kind, e)), r, e.clone())
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(&b.1)).then_with(|| a.2.cmp(&b.2)));
    scored.into_iter().take(k).map(|s| s.2).collect()
}

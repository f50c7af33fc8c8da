//! Independent reference implementations the library is checked against.

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

use promkg::graph::{Direction, Entity, EntityId, EntityKind, Graph, Relation, RelationKind};
use promkg::parse::Hop;
use promkg::retrieve::{ResolvedPath, Target};
use promkg::textindex::tokenize;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// A graph with at most `max_entities` component entities and at most
/// `max_relations` schema-conforming relations between them.
pub fn random_graph(rng: &mut StdRng, max_entities: usize, max_relations: usize) -> Graph {
    let mut g = Graph::new();
    let n = rng.random_range(1..=max_entities);
    for i in 0..n {
        let kind = *EntityKind::COMPONENTS.choose(rng).unwrap();
        g.insert_entity(Entity::new(kind, format!("e{i}"))).unwrap();
    }
    let ids: Vec<EntityId> = g.entities().map(|e| e.id.clone()).collect();
    let kind_of = |g: &Graph, id: &EntityId| g.get(id).unwrap().kind;
    let target = rng.random_range(0..=max_relations);
    let mut attempts = 0;
    while g.relation_count() < target && attempts < max_relations * 20 {
        attempts += 1;
        let a = ids.choose(rng).unwrap();
        let b = ids.choose(rng).unwrap();
        let rels: Vec<RelationKind> = RelationKind::ALL
            .into_iter()
            .filter(|r| r.allows(kind_of(&g, a), kind_of(&g, b)))
            .collect();
        if let Some(r) = rels.choose(rng) {
            g.relate(a, *r, b).unwrap();
        }
    }
    g
}

/// Entities reached from `from` by one hop, found by scanning every
/// relation in the graph.
pub fn scan_neighbors(g: &Graph, from: &EntityId, kind: RelationKind, direction: Direction) -> BTreeSet<EntityId> {
    g.relations()
        .filter(|r| r.kind == kind)
        .filter_map(|r: &Relation| match direction {
            Direction::Forward if &r.src == from => Some(r.dst.clone()),
            Direction::Backward if &r.dst == from => Some(r.src.clone()),
            _ => None,
        })
        .collect()
}

/// Every instantiation of `path`, by depth-first search over a full scan of
/// the relation set at each step.
pub fn enumerate_paths(g: &Graph, path: &ResolvedPath) -> BTreeSet<(EntityId, Vec<(Hop, EntityId)>)> {
    fn dfs(
        g: &Graph,
        hops: &[(Hop, Target)],
        start: &EntityId,
        acc: &mut Vec<(Hop, EntityId)>,
        out: &mut BTreeSet<(EntityId, Vec<(Hop, EntityId)>)>,
    ) {
        let Some(((hop, target), rest)) = hops.split_first() else {
            out.insert((start.clone(), acc.clone()));
            return;
        };
        let current = acc.last().map(|(_, e)| e.clone()).unwrap_or_else(|| start.clone());
        for next in scan_neighbors(g, &current, hop.relation, hop.direction) {
            let ok = match target {
                Target::Entity(id) => &next == id,
                Target::Any(kind) => g.get(&next).unwrap().kind == *kind,
            };
            if ok {
                acc.push((*hop, next));
                dfs(g, rest, start, acc, out);
                acc.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    if g.contains(&path.start) {
        dfs(g, &path.hops, &path.start, &mut Vec::new(), &mut out);
    }
    out
}

/// All schema-valid hop shapes of up to `max_hops` hops starting at `kind`.
pub fn hop_shapes(kind: EntityKind, max_hops: usize) -> Vec<Vec<(Hop, EntityKind)>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<(EntityKind, Vec<(Hop, EntityKind)>)> = vec![(kind, Vec::new())];
    for _ in 0..max_hops {
        let mut next = Vec::new();
        for (from, shape) in &frontier {
            for rel in RelationKind::ALL {
                for dir in [Direction::Forward, Direction::Backward] {
                    for to in EntityKind::COMPONENTS {
                        if rel.allows_hop(*from, dir, to) {
                            let hop = match dir {
                                Direction::Forward => Hop::forward(rel),
                                Direction::Backward => Hop::backward(rel),
                            };
                            let mut s = shape.clone();
                            s.push((hop, to));
                            out.push(s.clone());
                            next.push((to, s));
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    out
}

/// Resolved paths for one start entity: every hop shape of up to
/// `max_hops` hops and every placement of at most `max_placeholders`
/// placeholders; other elements are named with a random entity of the
/// right kind (preferring one actually reachable, so matches happen).
pub fn relation_paths(
    g: &Graph,
    start: &EntityId,
    max_hops: usize,
    max_placeholders: usize,
    rng: &mut StdRng,
) -> Vec<ResolvedPath> {
    let kind = g.get(start).unwrap().kind;
    let mut out = Vec::new();
    for shape in hop_shapes(kind, max_hops) {
        let n = shape.len();
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize > max_placeholders {
                continue;
            }
            let mut current: Vec<EntityId> = vec![start.clone()];
            let mut hops = Vec::with_capacity(n);
            for (i, (hop, to)) in shape.iter().enumerate() {
                let reachable: Vec<EntityId> = current
                    .iter()
                    .flat_map(|c| scan_neighbors(g, c, hop.relation, hop.direction))
                    .filter(|e| g.get(e).unwrap().kind == *to)
                    .collect();
                if mask & (1 << i) != 0 {
                    hops.push((*hop, Target::Any(*to)));
                    current = reachable;
                } else {
                    let pool: Vec<EntityId> = if reachable.is_empty() || rng.random_bool(0.2) {
                        g.entities_of_kind(*to).iter().cloned().collect()
                    } else {
                        reachable
                    };
                    match pool.choose(rng) {
                        Some(e) => {
                            hops.push((*hop, Target::Entity(e.clone())));
                            current = vec![e.clone()];
                        }
                        None => {
                            hops.push((*hop, Target::Any(*to)));
                            current = Vec::new();
                        }
                    }
                }
            }
            out.push(ResolvedPath {
                start: start.clone(),
                hops,
            });
        }
    }
    out
}

/// BM25 straight from the formula: Lucene idf floored at zero, distinct
/// query terms, descending score then ascending id, zero scores dropped.
pub fn bm25_brute(docs: &[(String, String)], query: &str, k1: f64, b: f64) -> Vec<(String, f64)> {
    let toks: Vec<Vec<String>> = docs.iter().map(|(_, t)| tokenize(t)).collect();
    let n = docs.len() as f64;
    let avgdl = toks.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let terms: BTreeSet<String> = tokenize(query).into_iter().collect();
    let mut out = Vec::new();
    for (i, (id, _)) in docs.iter().enumerate() {
        let dl = toks[i].len() as f64;
        let mut score = 0.0;
        for t in &terms {
            let tf = toks[i].iter().filter(|x| *x == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = toks.iter().filter(|d| d.contains(t)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln().max(0.0);
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
        if score > 0.0 {
            out.push((id.clone(), score));
        }
    }
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    out
}

const WORDS: &[&str] = &[
    "cpu",
    "memory",
    "bytes",
    "node",
    "pod",
    "request",
    "latency",
    "error",
    "disk",
    "network",
    "receive",
    "transmit",
    "total",
    "seconds",
    "usage",
    "available",
    "container",
    "service",
    "order",
    "travel",
];

/// `n` documents of 1 to 12 words drawn from a small vocabulary (so terms
/// repeat within and across documents).
pub fn random_corpus(rng: &mut StdRng, n: usize) -> Vec<(String, String)> {
    (0..n)
        .map(|i| {
            let len = rng.random_range(1..=12);
            let words: Vec<&str> = (0..len).map(|_| *WORDS.choose(rng).unwrap()).collect();
            (format!("d{i:02}"), words.join(" "))
        })
        .collect()
}

pub fn random_query(rng: &mut StdRng) -> String {
    let len = rng.random_range(1..=4);
    (0..len).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

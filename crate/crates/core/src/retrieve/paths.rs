use crate::graph::{EntityId, EntityKind, Graph};
use crate::parse::{ComponentsRelationPath, Hop, PathElement, PathName};

use super::{KnowledgeIndex, Provenance, ReasoningPath, RetrieveError};

/// Most reasoning paths kept per relation path.
pub const BFS_PATH_CAP: usize = 1000;

/// What an element of a resolved path may match.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Target {
    /// Exactly this entity.
    Entity(EntityId),
    /// Any entity of this kind (a `?` in the relation path).
    Any(EntityKind),
}

/// A relation path whose first element is a concrete graph entity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResolvedPath {
    pub start: EntityId,
    pub hops: Vec<(Hop, Target)>,
}

/// Splits a path at its first named element so every piece starts there.
///
/// For `e0 r0 e1 r1 e2` with `e1` the first named element the result is
/// `[e1 r0' e0, e1 r1 e2]`, where `r0'` is `r0` walked in the opposite
/// direction. A prefix or suffix without hops is kept only when it is the
/// whole path.
pub fn split_path(p: &ComponentsRelationPath) -> Vec<ComponentsRelationPath> {
    let elems: Vec<&PathElement> = p.elements().collect();
    let Some(i) = elems.iter().position(|e| !e.name.is_placeholder()) else {
        return Vec::new();
    };
    if i == 0 {
        return vec![p.clone()];
    }
    let pivot = elems[i].clone();
    let mut back = ComponentsRelationPath::single(pivot.clone());
    for j in (0..i).rev() {
        // hop j connects elems[j] -> elems[j + 1]
        let hop = p.hops[j].0;
        back = back.then(hop.flipped(), elems[j].clone());
    }
    let mut out = vec![back];
    if i < p.hops.len() {
        let mut fwd = ComponentsRelationPath::single(pivot);
        for (hop, e) in &p.hops[i..] {
            fwd = fwd.then(*hop, e.clone());
        }
        out.push(fwd);
    }
    out
}

fn resolve_element(g: &Graph, index: &KnowledgeIndex, e: &PathElement) -> Result<Target, String> {
    match &e.name {
        PathName::Placeholder => Ok(Target::Any(e.kind)),
        PathName::Named(n) => index
            .resolve_name(g, e.kind, n)
            .map(Target::Entity)
            .ok_or_else(|| format!("no {} matches {:?}", e.kind.slug(), n)),
    }
}

/// Splits every path at its first named entity and resolves names to graph
/// entities of the same kind. Paths with an unresolvable name are dropped;
/// each drop adds a diagnostic.
pub fn preprocess_paths(paths: &[ComponentsRelationPath], g: &Graph, index: &KnowledgeIndex) -> (Vec<ResolvedPath>, Vec<String>) {
    let mut out: Vec<ResolvedPath> = Vec::new();
    let mut notes = Vec::new();
    for p in paths {
        for piece in split_path(p) {
            let resolved = (|| -> Result<ResolvedPath, String> {
                let start = match resolve_element(g, index, &piece.start)? {
                    Target::Entity(id) => id,
                    Target::Any(_) => unreachable!("split pieces start at a named element"),
                };
                let hops = piece
                    .hops
                    .iter()
                    .map(|(hop, e)| Ok((*hop, resolve_element(g, index, e)?)))
                    .collect::<Result<Vec<_>, String>>()?;
                Ok(ResolvedPath { start, hops })
            })();
            match resolved {
                Ok(r) => {
                    if !out.contains(&r) {
                        out.push(r);
                    }
                }
                Err(why) => {
                    tracing::warn!(path = %piece, reason = %why, "dropping relation path");
                    notes.push(format!("dropped path {piece}: {why}"));
                }
            }
        }
    }
    (out, notes)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BfsOutcome {
    pub paths: Vec<ReasoningPath>,
    /// Set when the result hit [`BFS_PATH_CAP`].
    pub truncated: bool,
}

/// Level-by-level instantiation of a resolved path: at every hop each
/// partial path is extended by each neighbour through the hop's relation
/// that is the expected entity, or any entity of the expected kind for a
/// placeholder.
pub fn bfs_reasoning_paths(g: &Graph, path: &ResolvedPath) -> Result<BfsOutcome, RetrieveError> {
    if !g.contains(&path.start) {
        return Err(RetrieveError::UnknownStart(path.start.clone()));
    }
    let mut paths = vec![ReasoningPath::new(path.start.clone(), Provenance::Component)];
    let mut truncated = false;
    for (hop, expected) in &path.hops {
        let mut next = Vec::new();
        'outer: for p in &paths {
            let current = p.last();
            let connected = g
                .neighbors(current, hop.relation, hop.direction)
                .expect("path entities come from the graph");
            for node in connected {
                let ok = match expected {
                    Target::Entity(id) => node == id,
                    Target::Any(kind) => g.get(node).is_some_and(|e| e.kind == *kind),
                };
                if ok {
                    if next.len() == BFS_PATH_CAP {
                        truncated = true;
                        break 'outer;
                    }
                    let mut np = p.clone();
                    np.hops.push((*hop, node.clone()));
                    next.push(np);
                }
            }
        }
        paths = next;
    }
    if truncated {
        tracing::warn!(start = %path.start, cap = BFS_PATH_CAP, "reasoning paths truncated");
    }
    Ok(BfsOutcome { paths, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Entity, RelationKind};
    use crate::parse::parse_path_line;

    fn order_service_graph() -> Graph {
        let mut g = Graph::new();
        let svc = g.insert_entity(Entity::new(EntityKind::Service, "order service")).unwrap();
        let mut ids = Vec::new();
        for (pod, node) in [("pod1", "node1"), ("pod2", "node3")] {
            let p = g.insert_entity(Entity::new(EntityKind::Pod, pod)).unwrap();
            let n = g.insert_entity(Entity::new(EntityKind::Node, node)).unwrap();
            g.relate(&svc, RelationKind::Targets, &p).unwrap();
            g.relate(&n, RelationKind::Hosts, &p).unwrap();
            ids.push((p, n));
        }
        let other = g.insert_entity(Entity::new(EntityKind::Pod, "pod3")).unwrap();
        let n2 = g.insert_entity(Entity::new(EntityKind::Node, "node2")).unwrap();
        g.relate(&n2, RelationKind::Hosts, &other).unwrap();
        g
    }

    #[test]
    fn order_service_yields_two_paths() {
        let g = order_service_graph();
        let idx = KnowledgeIndex::build(&g);
        let p = parse_path_line("(service: order service)-targets->(pod:?)<-host-(node:?)").unwrap();
        let (resolved, notes) = preprocess_paths(&[p], &g, &idx);
        assert!(notes.is_empty());
        assert_eq!(resolved.len(), 1);
        let out = bfs_reasoning_paths(&g, &resolved[0]).unwrap();
        let rendered: Vec<String> = out.paths.iter().map(|p| p.render(&g)).collect();
        assert_eq!(
            rendered,
            [
                "(service:order service)-targets->(pod:pod1)<-hosts-(node:node1)",
                "(service:order service)-targets->(pod:pod2)<-hosts-(node:node3)",
            ]
        );
        assert!(!out.truncated);
    }

    #[test]
    fn split_reverses_prefix() {
        let p = parse_path_line("(pod:?)<-targets-(service:order service)").unwrap();
        let pieces = split_path(&p);
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].to_string(), "(service:order service)-targets->(pod:?)");

        let p = parse_path_line("(node:?)-hosts->(pod:?)<-targets-(service:s)-provides->(api:?)").unwrap();
        let pieces: Vec<String> = split_path(&p).iter().map(|x| x.to_string()).collect();
        assert_eq!(
            pieces,
            [
                "(service:s)-targets->(pod:?)<-hosts-(node:?)",
                "(service:s)-provides->(api:?)"
            ]
        );
    }

    #[test]
    fn single_entity_path() {
        let g = order_service_graph();
        let start = EntityId::new(EntityKind::Node, "node1");
        let out = bfs_reasoning_paths(
            &g,
            &ResolvedPath {
                start: start.clone(),
                hops: vec![],
            },
        )
        .unwrap();
        assert_eq!(out.paths, vec![ReasoningPath::new(start, Provenance::Component)]);
    }

    #[test]
    fn unknown_start_and_unresolvable_name() {
        let g = order_service_graph();
        let ghost = ResolvedPath {
            start: EntityId::new(EntityKind::Node, "ghost"),
            hops: vec![],
        };
        assert!(matches!(bfs_reasoning_paths(&g, &ghost), Err(RetrieveError::UnknownStart(_))));
        let idx = KnowledgeIndex::build(&g);
        let p = parse_path_line("(service:payments)-targets->(pod:?)").unwrap();
        let (resolved, notes) = preprocess_paths(&[p], &g, &idx);
        assert!(resolved.is_empty());
        assert_eq!(notes.len(), 1);
    }

    #[test]
    fn concrete_middle_element_filters() {
        let g = order_service_graph();
        let idx = KnowledgeIndex::build(&g);
        let p = parse_path_line("(service:order service)-targets->(pod:pod2)<-hosts-(node:?)").unwrap();
        let (resolved, _) = preprocess_paths(&[p], &g, &idx);
        let out = bfs_reasoning_paths(&g, &resolved[0]).unwrap();
        assert_eq!(out.paths.len(), 1);
        assert_eq!(out.paths[0].last(), &EntityId::new(EntityKind::Node, "node3"));
    }
}

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{filter_intra_repo, resolve_module, CodeParser, Repo};
use crate::Diagnostics;

/// Edge `(a, b)`: file `a` imports from file `b`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FileDependencyGraph {
    pub nodes: Vec<String>,
    pub edges: BTreeSet<(String, String)>,
}

impl FileDependencyGraph {
    pub fn new(nodes: impl IntoIterator<Item = String>, edges: impl IntoIterator<Item = (String, String)>) -> Self {
        let nodes: BTreeSet<String> = nodes.into_iter().collect();
        let edges = edges
            .into_iter()
            .filter(|(a, b)| a != b && nodes.contains(a) && nodes.contains(b))
            .collect();
        Self { nodes: nodes.into_iter().collect(), edges }
    }
}

pub fn build_file_dependency_graph(repo: &Repo, parser: &dyn CodeParser, diags: &mut Diagnostics) -> FileDependencyGraph {
    let mut edges = BTreeSet::new();
    for file in repo.files() {
        let Some(language) = file.language() else { continue };
        let imports = parser.extract_imports(file, language, diags);
        for import in filter_intra_repo(&imports, repo, &file.path, language) {
            if let Some(target) = resolve_module(&import.module, &file.path, language, repo) {
                edges.insert((file.path.clone(), target.path.clone()));
            }
        }
    }
    FileDependencyGraph::new(repo.files().iter().map(|f| f.path.clone()), edges)
}

/// Files of one weakly connected component, dependency-first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoCluster {
    pub files: Vec<String>,
    /// Intra-cluster edges that survived cycle breaking.
    pub edges: BTreeSet<(String, String)>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Weakly connected components with at least two files, ordered by their
/// smallest path.
pub fn cluster_files(graph: &FileDependencyGraph) -> Vec<RepoCluster> {
    let index: BTreeMap<&str, usize> = graph.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut parent: Vec<usize> = (0..graph.nodes.len()).collect();
    for (a, b) in &graph.edges {
        let (ra, rb) = (find(&mut parent, index[a.as_str()]), find(&mut parent, index[b.as_str()]));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut components: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, node) in graph.nodes.iter().enumerate() {
        let root = find(&mut parent, i);
        components.entry(root).or_default().push(node.clone());
    }
    components
        .into_values()
        .filter(|files| files.len() >= 2)
        .map(|files| {
            let members: BTreeSet<&String> = files.iter().collect();
            let edges: BTreeSet<(String, String)> = graph
                .edges
                .iter()
                .filter(|(a, b)| members.contains(a) && members.contains(b))
                .cloned()
                .collect();
            let (order, surviving) = topo_sort_cluster(&files, &edges);
            RepoCluster { files: order, edges: surviving }
        })
        .collect()
}

/// Dependency-first order: a file is emitted once everything it imports
/// has been emitted, smallest path first among ready files. When only
/// cycles remain, the edge from the lexicographically largest remaining
/// source to its largest remaining target is dropped.
///
/// Returns the order and the edges that survived.
pub fn topo_sort_cluster(files: &[String], edges: &BTreeSet<(String, String)>) -> (Vec<String>, BTreeSet<(String, String)>) {
    let mut out_edges: BTreeMap<&str, BTreeSet<&str>> = files.iter().map(|f| (f.as_str(), BTreeSet::new())).collect();
    let mut in_edges: BTreeMap<&str, BTreeSet<&str>> = files.iter().map(|f| (f.as_str(), BTreeSet::new())).collect();
    for (a, b) in edges {
        if let (Some(_), Some(_)) = (out_edges.get(a.as_str()), in_edges.get(b.as_str())) {
            out_edges.get_mut(a.as_str()).unwrap().insert(b.as_str());
            in_edges.get_mut(b.as_str()).unwrap().insert(a.as_str());
        }
    }
    let mut surviving: BTreeSet<(String, String)> = BTreeSet::new();
    for (a, targets) in &out_edges {
        for b in targets {
            surviving.insert((String::from(*a), String::from(*b)));
        }
    }

    // Pending dependencies per file.
    let mut pending: BTreeMap<&str, BTreeSet<&str>> = out_edges.clone();
    let mut ready: BTreeSet<&str> = pending.iter().filter(|(_, deps)| deps.is_empty()).map(|(f, _)| *f).collect();
    let mut order = Vec::with_capacity(files.len());
    while order.len() < pending.len() {
        if let Some(next) = ready.pop_first() {
            order.push(String::from(next));
            for dependent in &in_edges[next] {
                if let Some(deps) = pending.get_mut(dependent) {
                    if deps.remove(next) && deps.is_empty() {
                        ready.insert(dependent);
                    }
                }
            }
            continue;
        }
        let emitted: BTreeSet<&str> = order.iter().map(String::as_str).collect();
        let (source, deps) = pending
            .iter_mut()
            .rfind(|(f, deps)| !emitted.contains(**f) && !deps.is_empty())
            .expect("a stuck graph has a remaining file with dependencies");
        let target = deps.pop_last().expect("non-empty dependencies");
        surviving.remove(&(String::from(*source), String::from(target)));
        if deps.is_empty() {
            ready.insert(source);
        }
    }
    (order, surviving)
}

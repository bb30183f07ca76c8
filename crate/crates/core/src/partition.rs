//! Disjoint-set partition of qubits into entanglement groups.
//!
//! Each qubit points at a node of a union-find forest. Detaching a qubit
//! gives it a fresh singleton node, so groups can split without rebuilding
//! the forest.

#[derive(Clone, Debug)]
pub struct Partition {
    node_of: Vec<usize>,
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl Partition {
    /// `n` singleton groups.
    pub fn new(n: usize) -> Self {
        Self { node_of: (0..n).collect(), parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub fn num_qubits(&self) -> usize {
        self.node_of.len()
    }

    /// Upper bound on root ids, for sizing per-group tables.
    pub fn num_nodes(&self) -> usize {
        self.parent.len()
    }

    fn root(&self, mut node: usize) -> usize {
        while self.parent[node] != node {
            node = self.parent[node];
        }
        node
    }

    fn root_compress(&mut self, mut node: usize) -> usize {
        let root = self.root(node);
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    /// Group id of qubit `q`.
    pub fn find(&self, q: usize) -> usize {
        self.root(self.node_of[q])
    }

    pub fn same_group(&self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    /// Merges the groups of `a` and `b`, returning the surviving id.
    pub fn union(&mut self, a: usize, b: usize) -> usize {
        let mut ra = self.root_compress(self.node_of[a]);
        let mut rb = self.root_compress(self.node_of[b]);
        if ra == rb {
            return ra;
        }
        if self.rank[ra] < self.rank[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        if self.rank[ra] == self.rank[rb] {
            self.rank[ra] = self.rank[ra].saturating_add(1);
        }
        ra
    }

    /// Moves `q` into a new singleton group and returns its id. The old
    /// group keeps its id.
    pub fn detach(&mut self, q: usize) -> usize {
        let node = self.parent.len();
        self.parent.push(node);
        self.rank.push(0);
        self.node_of[q] = node;
        node
    }
}
